// Association-rule mining over posterior cluster draws. Each retained
// partition contributes one transaction block per cluster of at least
// min_cluster_size units; items are (column, level) codes from the
// discretized view. Mining is level-wise with downward closure; emitted
// rules are single-item antecedent and consequent over distinct columns.
// Frequent order-3 itemsets are retained for three-way follow-up but never
// enter the pair aggregation.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "raid/core.hpp"

namespace raid::rules {

struct MiningConfig {
    double min_support = 0.25;
    double min_confidence = 0.5;
    int min_cluster_size = 10;
    int max_order = 2;

    void validate() const {
        if (!(min_support > 0.0 && min_support <= 1.0))
            throw core::ValidationError("min_support must be in (0,1]");
        if (!(min_confidence > 0.0 && min_confidence <= 1.0))
            throw core::ValidationError("min_confidence must be in (0,1]");
        if (min_cluster_size < 1) throw core::ValidationError("min_cluster_size must be >= 1");
        if (max_order < 2 || max_order > 3) throw core::ValidationError("max_order must be 2 or 3");
    }
};

struct AssociationRule {
    int antecedent = 0;  // item code
    int consequent = 0;  // item code, different column
    double support = 0.0;
    double confidence = 0.0;
    int cluster_size = 0;
};

struct FrequentTriple {
    std::array<int, 3> items{};
    double support = 0.0;
    int cluster_size = 0;
};

struct BlockResult {
    std::vector<AssociationRule> rules;
    std::vector<FrequentTriple> triples;
    int cluster_size = 0;
};

// Apriori over one transaction block. Rows index into the discretized view.
inline BlockResult mine_block(const core::DiscretizedView& view, std::span<const size_t> rows,
                              const MiningConfig& cfg) {
    cfg.validate();
    BlockResult out;
    const int n = static_cast<int>(rows.size());
    out.cluster_size = n;
    if (n == 0) return out;
    const size_t I = view.n_items;
    const size_t C = view.n_cols();
    const double dn = static_cast<double>(n);

    std::vector<int> cnt1(I, 0);
    for (size_t r : rows)
        for (size_t c = 0; c < C; ++c) ++cnt1[view.item_code(c, view.level_of(r, c))];

    std::vector<int> frequent1;
    std::vector<char> is_f1(I, 0);
    for (size_t a = 0; a < I; ++a) {
        if (cnt1[a] / dn >= cfg.min_support) {
            frequent1.push_back(static_cast<int>(a));
            is_f1[a] = 1;
        }
    }
    if (frequent1.empty()) return out;

    std::vector<int> col_of(I, 0);
    for (size_t c = 0; c < C; ++c)
        for (int l = 0; l < view.levels_per_col[c]; ++l) col_of[view.item_code(c, l)] = static_cast<int>(c);

    // Pair counts restricted to frequent singletons (downward closure).
    std::vector<int> cnt2(I * I, 0);
    for (size_t r : rows) {
        for (size_t c1 = 0; c1 + 1 < C; ++c1) {
            const int a = view.item_code(c1, view.level_of(r, c1));
            if (!is_f1[a]) continue;
            for (size_t c2 = c1 + 1; c2 < C; ++c2) {
                const int b = view.item_code(c2, view.level_of(r, c2));
                if (is_f1[b]) ++cnt2[static_cast<size_t>(a) * I + b];
            }
        }
    }

    std::vector<std::pair<int, int>> frequent2;
    for (int a : frequent1) {
        for (int b : frequent1) {
            if (b <= a || col_of[a] == col_of[b]) continue;
            const int cab = cnt2[static_cast<size_t>(a) * I + b];
            const double supp = cab / dn;
            if (supp < cfg.min_support) continue;
            frequent2.emplace_back(a, b);
            const double conf_ab = static_cast<double>(cab) / cnt1[a];
            const double conf_ba = static_cast<double>(cab) / cnt1[b];
            if (conf_ab >= cfg.min_confidence)
                out.rules.push_back({a, b, supp, conf_ab, n});
            if (conf_ba >= cfg.min_confidence)
                out.rules.push_back({b, a, supp, conf_ba, n});
        }
    }

    if (cfg.max_order >= 3 && !frequent2.empty()) {
        std::vector<char> f2(I * I, 0);
        for (auto [a, b] : frequent2) f2[static_cast<size_t>(a) * I + b] = 1;
        std::vector<std::array<int, 3>> cand;
        for (size_t u = 0; u < frequent2.size(); ++u) {
            for (size_t v = u + 1; v < frequent2.size(); ++v) {
                if (frequent2[u].first != frequent2[v].first) continue;
                const int a = frequent2[u].first;
                const int b = frequent2[u].second;
                const int c = frequent2[v].second;
                if (col_of[b] == col_of[c]) continue;
                if (!f2[static_cast<size_t>(std::min(b, c)) * I + std::max(b, c)]) continue;
                cand.push_back({a, std::min(b, c), std::max(b, c)});
            }
        }
        if (!cand.empty()) {
            std::vector<int> cnt3(cand.size(), 0);
            for (size_t r : rows) {
                for (size_t t = 0; t < cand.size(); ++t) {
                    const auto& tr = cand[t];
                    bool all = true;
                    for (int it : tr) {
                        const int c = col_of[it];
                        if (view.item_code(c, view.level_of(r, c)) != it) {
                            all = false;
                            break;
                        }
                    }
                    if (all) ++cnt3[t];
                }
            }
            for (size_t t = 0; t < cand.size(); ++t) {
                const double supp = cnt3[t] / dn;
                if (supp >= cfg.min_support) out.triples.push_back({cand[t], supp, n});
            }
        }
    }

    std::sort(out.rules.begin(), out.rules.end(), [](const AssociationRule& x, const AssociationRule& y) {
        if (x.antecedent != y.antecedent) return x.antecedent < y.antecedent;
        return x.consequent < y.consequent;
    });
    std::sort(out.triples.begin(), out.triples.end(),
              [](const FrequentTriple& x, const FrequentTriple& y) { return x.items < y.items; });
    return out;
}

struct IterateRules {
    std::vector<BlockResult> blocks;
};

// Mines every sufficiently large cluster of one retained partition.
inline IterateRules mine_iterate(const core::DiscretizedView& view, std::span<const int> labels,
                                 const MiningConfig& cfg) {
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    std::vector<std::vector<size_t>> members(k);
    for (size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    IterateRules out;
    for (int j = 0; j < k; ++j) {
        if (static_cast<int>(members[j].size()) < cfg.min_cluster_size) continue;
        out.blocks.push_back(mine_block(view, members[j], cfg));
    }
    return out;
}

struct ColumnPair {
    int a = 0, b = 0;  // column indices, a < b
    bool operator<(const ColumnPair& o) const { return a != o.a ? a < o.a : b < o.b; }
    bool operator==(const ColumnPair& o) const { return a == o.a && b == o.b; }
};

inline ColumnPair rule_column_pair(const core::DiscretizedView& view, const AssociationRule& r) {
    int ca = 0, cb = 0;
    for (size_t c = 0; c < view.n_cols(); ++c) {
        const int off = view.col_offset[c];
        if (r.antecedent >= off && r.antecedent < off + view.levels_per_col[c]) ca = static_cast<int>(c);
        if (r.consequent >= off && r.consequent < off + view.levels_per_col[c]) cb = static_cast<int>(c);
    }
    return ColumnPair{std::min(ca, cb), std::max(ca, cb)};
}

struct PairSummary {
    ColumnPair pair;
    double pr = 0.0;               // fraction of iterates with at least one firing rule
    double mean_support = 0.0;     // across firing iterates (within-iterate means)
    double mean_confidence = 0.0;
    double mean_cluster_size = 0.0;
    int firing_iterates = 0;
};

// Direction-symmetrized per-pair aggregation across iterates. Zero-rule
// iterates still count in the denominator of pr. Input order of iterates
// does not change the result.
inline std::vector<PairSummary> aggregate(const core::DiscretizedView& view,
                                          std::span<const IterateRules> iterates) {
    struct Acc {
        int firing = 0;
        double supp = 0.0, conf = 0.0, size = 0.0;
    };
    std::map<ColumnPair, Acc> acc;
    for (const auto& it : iterates) {
        std::map<ColumnPair, std::array<double, 4>> within;  // sum supp, conf, size, count
        for (const auto& blk : it.blocks) {
            for (const auto& r : blk.rules) {
                auto& w = within[rule_column_pair(view, r)];
                w[0] += r.support;
                w[1] += r.confidence;
                w[2] += r.cluster_size;
                w[3] += 1.0;
            }
        }
        for (const auto& [pair, w] : within) {
            auto& a = acc[pair];
            ++a.firing;
            a.supp += w[0] / w[3];
            a.conf += w[1] / w[3];
            a.size += w[2] / w[3];
        }
    }
    std::vector<PairSummary> out;
    const double T = static_cast<double>(iterates.size());
    for (const auto& [pair, a] : acc) {
        PairSummary s;
        s.pair = pair;
        s.firing_iterates = a.firing;
        s.pr = T > 0 ? a.firing / T : 0.0;
        s.mean_support = a.supp / a.firing;
        s.mean_confidence = a.conf / a.firing;
        s.mean_cluster_size = a.size / a.firing;
        out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](const PairSummary& x, const PairSummary& y) {
        if (x.pr != y.pr) return x.pr > y.pr;
        if (x.mean_support != y.mean_support) return x.mean_support > y.mean_support;
        return x.pair < y.pair;
    });
    return out;
}

inline std::vector<PairSummary> candidates_by_threshold(std::span<const PairSummary> summaries,
                                                        double threshold) {
    std::vector<PairSummary> out;
    for (const auto& s : summaries)
        if (s.pr >= threshold) out.push_back(s);
    return out;
}

// Per-iterate winner: the column pair maximizing the summed support +
// confidence over that iterate's rules; ties all count.
inline std::vector<ColumnPair> top_pairs_of_iterate(const core::DiscretizedView& view,
                                                    const IterateRules& it) {
    std::map<ColumnPair, double> score;
    for (const auto& blk : it.blocks)
        for (const auto& r : blk.rules) score[rule_column_pair(view, r)] += r.support + r.confidence;
    std::vector<ColumnPair> best;
    double mx = 0.0;
    for (const auto& [pair, s] : score) {
        if (s > mx + 1e-12) {
            mx = s;
            best = {pair};
        } else if (std::abs(s - mx) <= 1e-12) {
            best.push_back(pair);
        }
    }
    return best;
}

struct TopShare {
    ColumnPair pair;
    double share = 0.0;  // fraction of iterates where this pair is a (tied) winner
};

// Modal top pair(s) across iterates; ties at the maximal share are all kept.
inline std::vector<TopShare> modal_top_pairs(const core::DiscretizedView& view,
                                             std::span<const IterateRules> iterates) {
    std::map<ColumnPair, int> wins;
    for (const auto& it : iterates)
        for (const auto& pair : top_pairs_of_iterate(view, it)) ++wins[pair];
    std::vector<TopShare> out;
    int mx = 0;
    for (const auto& [pair, w] : wins) mx = std::max(mx, w);
    if (mx == 0) return out;
    for (const auto& [pair, w] : wins)
        if (w == mx) out.push_back({pair, static_cast<double>(w) / iterates.size()});
    return out;
}

}  // namespace raid::rules
