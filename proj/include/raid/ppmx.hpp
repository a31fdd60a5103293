// Covariate-dependent product partition prior: cluster cohesions and
// similarity marginals. Continuous columns use a Normal-Inverse-Gamma
// auxiliary model with the variance-multiplier convention
//   x | m, s2 ~ N(m, s2),  m | s2 ~ N(m0, k0 s2),  s2 ~ IG(nu0, kappa0),
// integrated in closed form. Categorical columns use a symmetric
// Dirichlet-multinomial marginal without the multinomial coefficient.
// All evaluations are O(1) given per-cluster sufficient statistics.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "raid/core.hpp"
#include "raid/math.hpp"

namespace raid::ppmx {

struct Partition {
    std::vector<int> labels;  // 0-based, contiguous
    int k = 0;

    static Partition from_labels(std::vector<int> labels) {
        Partition p;
        p.labels = std::move(labels);
        int mx = -1;
        for (int l : p.labels) {
            if (l < 0) throw core::ValidationError("partition label < 0");
            mx = std::max(mx, l);
        }
        p.k = mx + 1;
        std::vector<int> seen(p.k, 0);
        for (int l : p.labels) seen[l] = 1;
        for (int j = 0; j < p.k; ++j)
            if (!seen[j]) throw core::ValidationError("partition labels not contiguous");
        return p;
    }

    std::vector<int> sizes() const {
        std::vector<int> s(k, 0);
        for (int l : labels) ++s[l];
        return s;
    }

    // Canonical restricted-growth string; equal partitions share one key.
    std::string canonical_key() const {
        std::vector<int> remap(k, -1);
        int next = 0;
        std::string key;
        key.reserve(labels.size() * 2);
        for (int l : labels) {
            if (remap[l] < 0) remap[l] = next++;
            key += static_cast<char>('a' + remap[l]);
        }
        return key;
    }
};

enum class CohesionKind { dp, uniform };

struct CohesionSpec {
    CohesionKind kind = CohesionKind::dp;
    double M = 1.0;
};

// log c(S) for a cluster of the given size.
inline double log_cohesion(int size, const CohesionSpec& c) {
    if (size <= 0) throw core::ValidationError("cohesion of empty cluster");
    if (c.kind == CohesionKind::uniform) return 0.0;
    return std::log(c.M) + std::lgamma(static_cast<double>(size));
}

// log c(S + 1 unit) - log c(S); size is the cluster size before adding.
inline double log_cohesion_ratio(int size, const CohesionSpec& c) {
    if (c.kind == CohesionKind::uniform) return 0.0;
    return std::log(static_cast<double>(size));
}

struct SimilarityHyper {
    double m0 = 0.0;
    double k0 = 0.5;
    double nu0 = 1.0;     // inverse-gamma shape
    double kappa0 = 2.0;  // inverse-gamma rate
    double dirichlet_shape = 0.1;

    void validate() const {
        if (!(k0 > 0.0)) throw core::ValidationError("similarity k0 must be > 0");
        if (!(nu0 > 0.0)) throw core::ValidationError("similarity nu0 must be > 0");
        if (!(kappa0 > 0.0)) throw core::ValidationError("similarity kappa0 must be > 0");
        if (!(dirichlet_shape > 0.0)) throw core::ValidationError("dirichlet shape must be > 0");
    }
};

struct ContStats {
    int n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sumsq += x * x;
    }
    void remove(double x) {
        --n;
        sum -= x;
        sumsq -= x * x;
    }
};

// Optional precomputed table so the sampler's inner loop avoids lgamma:
// lg_half[j] = lgamma(nu0 + j/2) for cluster sizes j = 0..max.
struct SimTables {
    std::vector<double> lg_half;
    double log_kappa0 = 0.0;

    static SimTables build(const SimilarityHyper& h, size_t max_n) {
        SimTables t;
        t.lg_half.resize(max_n + 2);
        for (size_t j = 0; j < t.lg_half.size(); ++j)
            t.lg_half[j] = std::lgamma(h.nu0 + 0.5 * static_cast<double>(j));
        t.log_kappa0 = std::log(h.kappa0);
        return t;
    }
};

// Closed-form log marginal of n observations under the NIG auxiliary model.
inline double log_similarity_continuous(const ContStats& st, const SimilarityHyper& h,
                                        const SimTables* tab = nullptr) {
    if (st.n == 0) return 0.0;
    const double n = static_cast<double>(st.n);
    const double lambda = 1.0 / h.k0;
    const double xbar = st.sum / n;
    double ss = st.sumsq - st.sum * st.sum / n;
    if (ss < 0.0) ss = 0.0;  // cancellation guard
    const double dev = xbar - h.m0;
    const double bn = h.kappa0 + 0.5 * ss + lambda * n * dev * dev / (2.0 * (lambda + n));
    const double lg_nu0 = tab ? tab->lg_half[0] : std::lgamma(h.nu0);
    const double lg_n = tab ? tab->lg_half[st.n] : std::lgamma(h.nu0 + 0.5 * n);
    const double lk0 = tab ? tab->log_kappa0 : std::log(h.kappa0);
    return -0.5 * n * math::log_2pi + 0.5 * (std::log(lambda) - std::log(lambda + n)) +
           h.nu0 * lk0 - lg_nu0 + lg_n - (h.nu0 + 0.5 * n) * std::log(bn);
}

inline double log_similarity_continuous(std::span<const double> xs, const SimilarityHyper& h) {
    ContStats st;
    for (double x : xs) st.add(x);
    return log_similarity_continuous(st, h);
}

// Dirichlet-multinomial marginal (no multinomial coefficient): the
// probability of one particular sequence with the given level counts.
inline double log_similarity_categorical(std::span<const int> counts, double shape) {
    const int L = static_cast<int>(counts.size());
    int n = 0;
    double s = 0.0;
    for (int c : counts) {
        if (c < 0) throw core::ValidationError("negative level count");
        n += c;
        s += std::lgamma(shape + c);
    }
    if (n == 0) return 0.0;
    return s - L * std::lgamma(shape) + std::lgamma(L * shape) - std::lgamma(L * shape + n);
}

// Hypothetical covariate row for predictive allocation. Columns may be
// omitted, in which case they contribute nothing to the similarity.
struct CovariateRow {
    std::vector<bool> present;
    std::vector<double> cont;  // per column (continuous slots)
    std::vector<int> cat;      // per column (categorical slots)

    static CovariateRow all_absent(size_t p) {
        CovariateRow r;
        r.present.assign(p, false);
        r.cont.assign(p, 0.0);
        r.cat.assign(p, 0);
        return r;
    }

    static CovariateRow from_dataset(const core::Dataset& ds, size_t row) {
        CovariateRow r = all_absent(ds.p());
        for (size_t c = 0; c < ds.p(); ++c) {
            r.present[c] = true;
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous)
                r.cont[c] = ds.cols[c].values[row];
            else
                r.cat[c] = ds.cols[c].codes[row];
        }
        return r;
    }
};

// Per-cluster covariate sufficient statistics across all columns.
struct ClusterCovStats {
    std::vector<ContStats> cont;            // per column (continuous slots used)
    std::vector<std::vector<int>> counts;   // per column (categorical slots used)
    int n = 0;

    static ClusterCovStats empty(const core::Dataset& ds) {
        ClusterCovStats s;
        s.cont.resize(ds.p());
        s.counts.resize(ds.p());
        for (size_t c = 0; c < ds.p(); ++c)
            if (ds.cols[c].spec.kind == core::ColumnKind::categorical)
                s.counts[c].assign(ds.cols[c].spec.levels.size(), 0);
        return s;
    }

    void add_row(const core::Dataset& ds, size_t row) {
        ++n;
        for (size_t c = 0; c < ds.p(); ++c) {
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous)
                cont[c].add(ds.cols[c].values[row]);
            else
                ++counts[c][ds.cols[c].codes[row]];
        }
    }

    void remove_row(const core::Dataset& ds, size_t row) {
        --n;
        for (size_t c = 0; c < ds.p(); ++c) {
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous)
                cont[c].remove(ds.cols[c].values[row]);
            else
                --counts[c][ds.cols[c].codes[row]];
        }
    }

    // Full log similarity of the cluster's covariate block.
    double log_similarity(const core::Dataset& ds, const SimilarityHyper& h) const {
        double s = 0.0;
        for (size_t c = 0; c < ds.p(); ++c) {
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous)
                s += log_similarity_continuous(cont[c], h);
            else
                s += log_similarity_categorical(counts[c], h.dirichlet_shape);
        }
        return s;
    }

    // log g(X* + row) - log g(X*) for a dataset row, O(p).
    double delta_add_row(const core::Dataset& ds, size_t row, const SimilarityHyper& h,
                         const SimTables* tab = nullptr) const {
        double d = 0.0;
        for (size_t c = 0; c < ds.p(); ++c) {
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous) {
                ContStats st = cont[c];
                const double before = log_similarity_continuous(st, h, tab);
                st.add(ds.cols[c].values[row]);
                d += log_similarity_continuous(st, h, tab) - before;
            } else {
                const int lv = ds.cols[c].codes[row];
                const auto& cnt = counts[c];
                const double L = static_cast<double>(cnt.size());
                d += std::log(h.dirichlet_shape + cnt[lv]) - std::log(L * h.dirichlet_shape + n);
            }
        }
        return d;
    }

    // Same for a hypothetical row; absent columns contribute zero.
    double delta_add(const core::Dataset& ds, const CovariateRow& x0, const SimilarityHyper& h,
                     const SimTables* tab = nullptr) const {
        double d = 0.0;
        for (size_t c = 0; c < ds.p(); ++c) {
            if (!x0.present[c]) continue;
            if (ds.cols[c].spec.kind == core::ColumnKind::continuous) {
                ContStats st = cont[c];
                const double before = log_similarity_continuous(st, h, tab);
                st.add(x0.cont[c]);
                d += log_similarity_continuous(st, h, tab) - before;
            } else {
                const auto& cnt = counts[c];
                const double L = static_cast<double>(cnt.size());
                d += std::log(h.dirichlet_shape + cnt[x0.cat[c]]) - std::log(L * h.dirichlet_shape + n);
            }
        }
        return d;
    }
};

// Similarity of a singleton hypothetical row, log g({x0}).
inline double log_similarity_singleton(const core::Dataset& ds, const CovariateRow& x0,
                                       const SimilarityHyper& h) {
    ClusterCovStats st = ClusterCovStats::empty(ds);
    return st.delta_add(ds, x0, h);
}

// Unnormalized log prior mass of a partition: sum of log cohesion plus
// log similarity over clusters.
inline double log_partition_prior(const Partition& part, const core::Dataset& ds,
                                  const CohesionSpec& coh, const SimilarityHyper& h) {
    if (part.labels.size() != ds.m()) throw core::ValidationError("partition/dataset size mismatch");
    std::vector<ClusterCovStats> stats(part.k, ClusterCovStats::empty(ds));
    for (size_t i = 0; i < part.labels.size(); ++i) stats[part.labels[i]].add_row(ds, i);
    double lp = 0.0;
    for (int j = 0; j < part.k; ++j) {
        if (stats[j].n == 0) throw core::ValidationError("empty cluster in partition");
        lp += log_cohesion(stats[j].n, coh) + stats[j].log_similarity(ds, h);
    }
    return lp;
}

}  // namespace raid::ppmx
