// Interaction testing: posterior predictive sampling at fixed covariate
// profiles, and a Polya-tree k-sample statistic calibrated by permutation.
//
// Predictive allocation for a profile x0 under one retained state: existing
// cluster j gets log weight [cohesion ratio] + [similarity ratio of adding
// x0]; a new cluster gets log M (dp) plus the singleton similarity, with
// fresh (mu, sigma) from the base measure. Covariate columns may be fixed,
// free (the tested columns), or omitted; omitted columns contribute nothing
// to the similarity, which leaves the allocation neutral in them.
//
// The Polya-tree statistic compares groups on dyadic sets cut at standard
// normal quantiles of the pooled standardized sample, Beta(c j^2, c j^2)
// at depth j, J = min(8, ceil(log2 n)). The reported p-value is
// (1 + #{perm >= observed}) / (1 + n_perm).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "raid/core.hpp"
#include "raid/math.hpp"
#include "raid/ppmx.hpp"
#include "raid/rng.hpp"
#include "raid/sampler.hpp"

namespace raid::ptest {

// Per-state cluster summaries rebuilt once from the draws for reuse across
// predictive draws.
struct StateCache {
    struct State {
        std::vector<ppmx::ClusterCovStats> clusters;
        std::vector<double> mu, sigma;
        double mu0 = 0.0, sigma0 = 1.0;
    };
    std::vector<State> states;
    const core::Dataset* ds = nullptr;
    sampler::PriorConfig prior;
    bool ordinal = false;
    std::vector<double> gamma;
    int n_grades = 0;

    static StateCache build(const core::Dataset& ds, const sampler::PosteriorDraws& draws,
                            const sampler::PriorConfig& prior) {
        StateCache cache;
        cache.ds = &ds;
        cache.prior = prior;
        cache.ordinal = draws.ordinal;
        cache.gamma = draws.gamma;
        cache.n_grades = draws.n_grades;
        cache.states.reserve(draws.states.size());
        for (const auto& st : draws.states) {
            State s;
            const int k = static_cast<int>(st.mu.size());
            s.clusters.assign(k, ppmx::ClusterCovStats::empty(ds));
            for (size_t i = 0; i < st.labels.size(); ++i) s.clusters[st.labels[i]].add_row(ds, i);
            s.mu = st.mu;
            s.sigma = st.sigma;
            s.mu0 = st.mu0;
            s.sigma0 = st.sigma0;
            cache.states.push_back(std::move(s));
        }
        return cache;
    }

    // Normalized allocation weights for x0 under state t; the last entry is
    // the new-cluster weight.
    std::vector<double> allocation_weights(size_t t, const ppmx::CovariateRow& x0) const {
        const auto& st = states[t];
        const size_t k = st.clusters.size();
        std::vector<double> logw(k + 1);
        for (size_t j = 0; j < k; ++j) {
            logw[j] = ppmx::log_cohesion_ratio(st.clusters[j].n, prior.cohesion) +
                      st.clusters[j].delta_add(*ds, x0, prior.similarity);
        }
        const double log_mass = prior.cohesion.kind == ppmx::CohesionKind::dp
                                    ? std::log(prior.cohesion.M)
                                    : 0.0;
        logw[k] = log_mass + ppmx::log_similarity_singleton(*ds, x0, prior.similarity);
        const double lse = math::log_sum_exp(logw);
        for (auto& w : logw) w = std::exp(w - lse);
        return logw;
    }
};

// One predictive response draw (latent scale for ordinal): pick a retained
// state uniformly, allocate x0, then draw from the located component.
inline double predictive_draw(const StateCache& cache, const ppmx::CovariateRow& x0, rng::Rng& rng) {
    const size_t t = static_cast<size_t>(rng.below(cache.states.size()));
    const auto& st = cache.states[t];
    const auto w = cache.allocation_weights(t, x0);
    double u = rng.uniform();
    size_t pick = w.size() - 1;
    for (size_t j = 0; j < w.size(); ++j) {
        u -= w[j];
        if (u < 0.0) {
            pick = j;
            break;
        }
    }
    double mu, sigma;
    if (pick < st.clusters.size()) {
        mu = st.mu[pick];
        sigma = st.sigma[pick];
    } else {
        mu = rng.normal(st.mu0, st.sigma0);
        sigma = rng.uniform(0.0, cache.prior.A);
        if (sigma <= 0.0) sigma = cache.prior.A * 1e-12;
    }
    return rng.normal(mu, sigma);
}

// Posterior predictive grade distribution at x0, Monte Carlo over states.
// Existing-cluster allocation is marginalized exactly; the new-cluster
// component uses one fresh base-measure draw per state. Rows sum to one.
inline std::vector<double> grade_probabilities(const StateCache& cache, const ppmx::CovariateRow& x0,
                                               int n_states, rng::Rng& rng) {
    if (!cache.ordinal) throw core::ValidationError("grade_probabilities needs an ordinal fit");
    const int K = cache.n_grades;
    std::vector<double> probs(K, 0.0);
    auto interval_mass = [&](double mu, double sigma, int g) {
        const double lo = (g == 0) ? -std::numeric_limits<double>::infinity() : cache.gamma[g - 1];
        const double hi = (g == K - 1) ? std::numeric_limits<double>::infinity() : cache.gamma[g];
        return math::normal_cdf((hi - mu) / sigma) - math::normal_cdf((lo - mu) / sigma);
    };
    for (int s = 0; s < n_states; ++s) {
        const size_t t = static_cast<size_t>(rng.below(cache.states.size()));
        const auto& st = cache.states[t];
        const auto w = cache.allocation_weights(t, x0);
        const size_t k = st.clusters.size();
        for (size_t j = 0; j < k; ++j)
            for (int g = 0; g < K; ++g) probs[g] += w[j] * interval_mass(st.mu[j], st.sigma[j], g);
        const double mu_new = rng.normal(st.mu0, st.sigma0);
        double sig_new = rng.uniform(0.0, cache.prior.A);
        if (sig_new <= 0.0) sig_new = cache.prior.A * 1e-12;
        for (int g = 0; g < K; ++g) probs[g] += w[k] * interval_mass(mu_new, sig_new, g);
    }
    for (auto& p : probs) p /= static_cast<double>(n_states);
    return probs;
}

// ---- Polya-tree k-sample machinery ----

struct PolyaTreeConfig {
    double c = 1.0;
    int max_depth = 8;
};

inline int tree_depth(size_t n_total, const PolyaTreeConfig& cfg) {
    int j = static_cast<int>(std::ceil(std::log2(std::max<size_t>(n_total, 2))));
    return std::min(cfg.max_depth, std::max(1, j));
}

namespace detail {

// lgamma tables per level: lg_a[j][t] = lgamma(c j^2 + t),
// lg_2a[j][t] = lgamma(2 c j^2 + t), t = 0..n_total.
struct PtTables {
    int J = 0;
    std::vector<std::vector<double>> lg_a, lg_2a;

    static PtTables build(int J, size_t n_total, double c) {
        PtTables t;
        t.J = J;
        t.lg_a.resize(J + 1);
        t.lg_2a.resize(J + 1);
        for (int j = 1; j <= J; ++j) {
            const double a = c * j * j;
            t.lg_a[j].resize(n_total + 1);
            t.lg_2a[j].resize(n_total + 1);
            for (size_t n = 0; n <= n_total; ++n) {
                t.lg_a[j][n] = std::lgamma(a + n);
                t.lg_2a[j][n] = std::lgamma(2.0 * a + n);
            }
        }
        return t;
    }
};

// log marginal of one group given its leaf counts at depth J, summed over
// internal splits; constant Beta(a,a) normalizers included.
inline double log_marginal(std::span<const int> leaf_counts, const PtTables& tab) {
    const int J = tab.J;
    std::vector<int> level = {leaf_counts.begin(), leaf_counts.end()};
    double lm = 0.0;
    for (int j = J; j >= 1; --j) {
        const int nodes = 1 << (j - 1);
        std::vector<int> parent(nodes);
        for (int u = 0; u < nodes; ++u) {
            const int nl = level[2 * u], nr = level[2 * u + 1];
            parent[u] = nl + nr;
            if (nl + nr > 0) {
                lm += tab.lg_a[j][nl] + tab.lg_a[j][nr] - tab.lg_2a[j][nl + nr];
                lm -= 2.0 * tab.lg_a[j][0] - tab.lg_2a[j][0];
            }
        }
        level = std::move(parent);
    }
    return lm;
}

}  // namespace detail

// Leaf index of each standardized observation under the standard normal
// dyadic partition at depth J.
inline std::vector<int> leaf_indices(std::span<const double> pooled, int J) {
    const size_t n = pooled.size();
    double mu = math::mean(pooled);
    double sd = n >= 2 ? math::sample_sd(pooled) : 1.0;
    if (!(sd > 0.0)) {
        mu = 0.0;
        sd = 1.0;  // degenerate pooled sample: identical leaves for all
    }
    const int leaves = 1 << J;
    std::vector<int> idx(n);
    for (size_t i = 0; i < n; ++i) {
        const double u = math::normal_cdf((pooled[i] - mu) / sd);
        int l = static_cast<int>(std::floor(u * leaves));
        idx[i] = std::clamp(l, 0, leaves - 1);
    }
    return idx;
}

// Observed k-sample statistic: sum of group log marginals minus the pooled
// log marginal, computed from precomputed leaf indices and group sizes.
inline double polya_tree_statistic_from_leaves(std::span<const int> leaves,
                                               std::span<const int> group_sizes, int J,
                                               const detail::PtTables& tab) {
    const int n_leaves = 1 << J;
    std::vector<int> pooled_cnt(n_leaves, 0);
    for (int l : leaves) ++pooled_cnt[l];
    double stat = -detail::log_marginal(pooled_cnt, tab);
    size_t offset = 0;
    std::vector<int> cnt(n_leaves);
    for (int gs : group_sizes) {
        std::fill(cnt.begin(), cnt.end(), 0);
        for (int i = 0; i < gs; ++i) ++cnt[leaves[offset + i]];
        stat += detail::log_marginal(cnt, tab);
        offset += static_cast<size_t>(gs);
    }
    return stat;
}

inline double polya_tree_statistic(std::span<const std::vector<double>> groups,
                                   const PolyaTreeConfig& cfg = {}) {
    std::vector<double> pooled;
    std::vector<int> sizes;
    for (const auto& g : groups) {
        pooled.insert(pooled.end(), g.begin(), g.end());
        sizes.push_back(static_cast<int>(g.size()));
    }
    const int J = tree_depth(pooled.size(), cfg);
    const auto tab = detail::PtTables::build(J, pooled.size(), cfg.c);
    const auto leaves = leaf_indices(pooled, J);
    return polya_tree_statistic_from_leaves(leaves, sizes, J, tab);
}

struct PermutationResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n_perm = 0;
    int depth = 0;
};

// Group labels are permuted preserving sizes; the pooled marginal and the
// leaf assignment are permutation-invariant and computed once.
inline PermutationResult permutation_test(std::span<const std::vector<double>> groups, int n_perm,
                                          rng::Rng& rng, const PolyaTreeConfig& cfg = {}) {
    if (groups.size() < 2) throw core::ValidationError("permutation test needs >= 2 groups");
    std::vector<double> pooled;
    std::vector<int> sizes;
    for (const auto& g : groups) {
        if (g.empty()) throw core::ValidationError("permutation test: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
        sizes.push_back(static_cast<int>(g.size()));
    }
    const int J = tree_depth(pooled.size(), cfg);
    const auto tab = detail::PtTables::build(J, pooled.size(), cfg.c);
    auto leaves = leaf_indices(pooled, J);

    PermutationResult res;
    res.depth = J;
    res.n_perm = n_perm;
    res.statistic = polya_tree_statistic_from_leaves(leaves, sizes, J, tab);
    int ge = 0;
    for (int pnum = 0; pnum < n_perm; ++pnum) {
        rng.shuffle(leaves);
        const double s = polya_tree_statistic_from_leaves(leaves, sizes, J, tab);
        if (s >= res.statistic - 1e-12) ++ge;
    }
    res.p_value = (1.0 + ge) / (1.0 + n_perm);
    return res;
}

// ---- Interaction test over predictive groups ----

enum class AbsentColumnRule {
    neutral,  // continuous fixed at median, categorical omitted
    fixed     // continuous fixed at median, categorical at modal level
};

struct TestConfig {
    int pred_draws = 100;
    int n_perm = 500;
    int replications = 1;
    AbsentColumnRule absent = AbsentColumnRule::fixed;
    PolyaTreeConfig pt;
    int grade_prob_states = 100;
};

struct GroupSpec {
    std::string label;
    ppmx::CovariateRow x0;
    std::vector<int> levels;  // per tested column
};

// Enumerates one predictive profile per level combination of the tested
// columns; free continuous columns take the within-bin median on the model
// (standardized) scale.
inline std::vector<GroupSpec> build_groups(const core::Dataset& ds, const core::DiscretizedView& view,
                                           std::span<const int> test_cols, AbsentColumnRule absent) {
    const size_t p = ds.p();
    ppmx::CovariateRow base = ppmx::CovariateRow::all_absent(p);
    for (size_t c = 0; c < p; ++c) {
        if (std::find(test_cols.begin(), test_cols.end(), static_cast<int>(c)) != test_cols.end())
            continue;
        if (ds.cols[c].spec.kind == core::ColumnKind::continuous) {
            base.present[c] = true;
            base.cont[c] = math::median(ds.cols[c].values);
        } else if (absent == AbsentColumnRule::fixed) {
            std::vector<int> cnt(ds.cols[c].spec.levels.size(), 0);
            for (int code : ds.cols[c].codes) ++cnt[code];
            base.present[c] = true;
            base.cat[c] = static_cast<int>(std::max_element(cnt.begin(), cnt.end()) - cnt.begin());
        }
    }

    std::vector<int> n_levels;
    for (int c : test_cols) n_levels.push_back(view.levels_per_col[c]);
    std::vector<GroupSpec> groups;
    std::vector<int> combo(test_cols.size(), 0);
    for (;;) {
        GroupSpec g;
        g.x0 = base;
        g.levels = combo;
        for (size_t t = 0; t < test_cols.size(); ++t) {
            const int c = test_cols[t];
            g.x0.present[c] = true;
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous)
                g.x0.cont[c] = view.bin_repr[c][combo[t]];
            else
                g.x0.cat[c] = combo[t];
            if (!g.label.empty()) g.label += ",";
            g.label += view.item_names[view.item_code(c, combo[t])];
        }
        groups.push_back(std::move(g));
        size_t t = test_cols.size();
        while (t > 0) {
            --t;
            if (++combo[t] < n_levels[t]) break;
            combo[t] = 0;
            if (t == 0) return groups;
        }
    }
}

struct TestReport {
    std::vector<int> columns;
    std::vector<std::string> group_labels;
    std::vector<int> group_sizes;
    std::vector<double> replicate_p;
    std::vector<double> replicate_stat;
    double average_p = 1.0;
    int n_perm = 0;
    int depth = 0;
    std::vector<std::vector<double>> last_samples;  // per group, final replication
};

// Full interaction test: replications share the retained states and refresh
// only the predictive draws; the reported p-value is the average.
inline TestReport test_interaction(const StateCache& cache, const core::Dataset& ds,
                                   const core::DiscretizedView& view, std::span<const int> test_cols,
                                   const TestConfig& cfg, rng::Rng& rng) {
    if (test_cols.size() < 2 || test_cols.size() > 3)
        throw core::ValidationError("test_interaction takes 2 or 3 columns");
    for (int c : test_cols)
        if (c < 0 || c >= static_cast<int>(ds.p()))
            throw core::ValidationError("test_interaction: column index out of range");
    const auto groups = build_groups(ds, view, test_cols, cfg.absent);

    TestReport rep;
    rep.columns.assign(test_cols.begin(), test_cols.end());
    rep.n_perm = cfg.n_perm;
    for (const auto& g : groups) {
        rep.group_labels.push_back(g.label);
        rep.group_sizes.push_back(cfg.pred_draws);
    }
    double sum_p = 0.0;
    for (int r = 0; r < cfg.replications; ++r) {
        std::vector<std::vector<double>> samples(groups.size());
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            samples[gi].resize(cfg.pred_draws);
            for (int d = 0; d < cfg.pred_draws; ++d)
                samples[gi][d] = predictive_draw(cache, groups[gi].x0, rng);
        }
        const auto res = permutation_test(samples, cfg.n_perm, rng, cfg.pt);
        rep.replicate_p.push_back(res.p_value);
        rep.replicate_stat.push_back(res.statistic);
        rep.depth = res.depth;
        sum_p += res.p_value;
        if (r == cfg.replications - 1) rep.last_samples = std::move(samples);
    }
    rep.average_p = sum_p / cfg.replications;
    return rep;
}

struct DensityTable {
    std::vector<double> grid;
    std::vector<std::vector<double>> per_group;
};

// Kernel densities of the group samples on one shared 512-point grid.
inline DensityTable density_grids(std::span<const std::vector<double>> groups, size_t points = 512) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& g : groups)
        for (double v : g) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.1 * (hi - lo);
    DensityTable t;
    t.grid = math::make_grid(lo - pad, hi + pad, points);
    for (const auto& g : groups) t.per_group.push_back(math::kde_on_grid(g, t.grid));
    return t;
}

}  // namespace raid::ptest
