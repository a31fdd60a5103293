// Nonconjugate auxiliary-variable Gibbs sampler (m-auxiliary scheme) for the
// covariate-dependent product partition model.
//
// Response models, cluster j parameters theta_j = (mu_j, sigma_j):
//   continuous: y_i ~ N(mu_j, sigma_j^2)
//   ordinal:    y_i = l  iff  gamma_l < z_i <= gamma_{l+1},
//               z_i ~ N(mu_j, sigma_j^2), fixed cutpoint grid
// Base measure: mu ~ N(mu0, sigma0^2), sigma ~ Uniform(0, A), with hypers
// mu0 ~ N(0, 10^2) (conjugate update) and sigma0 ~ Uniform(0, 10)
// (reflected random-walk Metropolis). sigma_j moves by a random walk on
// log sigma reflected at log A; the acceptance ratio carries the Jacobian
// sigma'/sigma. Sweep order: labels, cluster parameters, hypers, latents.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "raid/core.hpp"
#include "raid/math.hpp"
#include "raid/ppmx.hpp"
#include "raid/rng.hpp"

namespace raid::sampler {

struct PriorConfig {
    ppmx::CohesionSpec cohesion;
    ppmx::SimilarityHyper similarity;
    double A = 1.0;  // upper bound of the sigma support
    double mu0_mean = 0.0;
    double mu0_sd = 10.0;
    double sigma0_max = 10.0;
    bool fix_hyperparams = false;
    double fixed_mu0 = 0.0;
    double fixed_sigma0 = 1.0;
    std::vector<double> gamma = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};  // interior cutpoints

    void validate(const core::Dataset& ds) const {
        similarity.validate();
        if (!(A > 0.0)) throw core::ValidationError("A must be > 0");
        if (cohesion.kind == ppmx::CohesionKind::dp && !(cohesion.M > 0.0))
            throw core::ValidationError("cohesion mass M must be > 0");
        if (ds.response_kind == core::ResponseKind::ordinal) {
            if (static_cast<int>(gamma.size()) != ds.n_grades - 1)
                throw core::ValidationError("gamma grid needs n_grades - 1 interior cutpoints");
            for (size_t i = 1; i < gamma.size(); ++i)
                if (!(gamma[i] > gamma[i - 1]))
                    throw core::ValidationError("gamma grid must be strictly increasing");
        }
    }
};

struct McmcConfig {
    int n_iter = 2000;
    int burn_in = 1000;
    int thin = 2;
    int n_aux = 3;
    uint64_t seed = 1;
    bool prior_only = false;  // diagnostic: likelihood terms dropped

    void validate() const {
        if (n_iter <= burn_in) throw core::ValidationError("n_iter must exceed burn_in");
        if (burn_in < 0) throw core::ValidationError("burn_in must be >= 0");
        if (thin < 1) throw core::ValidationError("thin must be >= 1");
        if (n_aux < 1) throw core::ValidationError("n_aux must be >= 1");
    }
};

struct DrawState {
    std::vector<int> labels;  // 0-based, contiguous
    std::vector<double> mu, sigma;
    double mu0 = 0.0, sigma0 = 1.0;
    std::vector<double> z;  // ordinal only
};

struct PosteriorDraws {
    std::vector<DrawState> states;
    size_t m = 0;
    bool ordinal = false;
    int n_grades = 0;
    std::vector<double> gamma;
    uint64_t seed = 0;
    double accept_sigma = 0.0;
    double accept_sigma0 = 0.0;
    double wall_ms = 0.0;  // runtime metadata; not part of the serialized stream

    double mean_clusters() const {
        if (states.empty()) return 0.0;
        double s = 0.0;
        for (const auto& st : states) s += static_cast<double>(st.mu.size());
        return s / static_cast<double>(states.size());
    }
};

namespace detail {

inline double reflect_into(double v, double lo, double hi) {
    const double span = hi - lo;
    for (int guard = 0; guard < 64 && (v < lo || v > hi); ++guard) {
        if (v < lo) v = 2.0 * lo - v;
        if (v > hi) v = 2.0 * hi - v;
    }
    return std::clamp(v, lo, hi);
}

}  // namespace detail

class Chain {
  public:
    Chain(const core::Dataset& ds, PriorConfig prior, McmcConfig cfg)
        : ds_(ds), prior_(std::move(prior)), cfg_(cfg), rng_(cfg.seed) {
        cfg_.validate();
        prior_.validate(ds);
        ds_.validate();
        ordinal_ = ds_.response_kind == core::ResponseKind::ordinal;
        if (!ordinal_) {
            bool any_cont = false;
            for (const auto& c : ds_.cols) any_cont |= c.spec.kind == core::ColumnKind::continuous;
            if (any_cont && !ds_.covariates_standardized)
                throw core::ValidationError("continuous covariates must be standardized before sampling");
        }
        init_state();
    }

    void sweep() {
        update_labels();
        update_cluster_params();
        update_hyperparams();
        if (ordinal_) update_latents();
    }

    // One pass of the auxiliary-variable label update over all units.
    void update_labels() {
        const size_t m = ds_.m();
        const int n_aux = cfg_.n_aux;
        const bool dp = prior_.cohesion.kind == ppmx::CohesionKind::dp;
        const double log_new_mass = (dp ? std::log(prior_.cohesion.M) : 0.0) -
                                    std::log(static_cast<double>(n_aux));
        for (size_t i = 0; i < m; ++i) {
            const int old = labels_[i];
            const bool was_singleton = clusters_[old].cov.n == 1;
            double held_mu = 0.0, held_sigma = 1.0;
            if (was_singleton) {
                held_mu = clusters_[old].mu;
                held_sigma = clusters_[old].sigma;
                drop_cluster(old);
            } else {
                clusters_[old].cov.remove_row(ds_, i);
            }

            const size_t k = clusters_.size();
            const double yi = resp_[i];
            logw_.resize(k + n_aux);
            for (size_t j = 0; j < k; ++j) {
                logw_[j] = ppmx::log_cohesion_ratio(clusters_[j].cov.n, prior_.cohesion) +
                           clusters_[j].cov.delta_add_row(ds_, i, prior_.similarity, &sim_tables_) +
                           loglik(yi, clusters_[j].mu, clusters_[j].sigma);
            }
            const double lg_single = singleton_sim_[i];
            aux_mu_.resize(n_aux);
            aux_sigma_.resize(n_aux);
            for (int t = 0; t < n_aux; ++t) {
                if (t == 0 && was_singleton) {
                    aux_mu_[t] = held_mu;
                    aux_sigma_[t] = held_sigma;
                } else {
                    aux_mu_[t] = rng_.normal(mu0_, sigma0_);
                    aux_sigma_[t] = rng_.uniform(0.0, prior_.A);
                    if (aux_sigma_[t] <= 0.0) aux_sigma_[t] = prior_.A * 1e-12;
                }
                logw_[k + t] = log_new_mass + lg_single + loglik(yi, aux_mu_[t], aux_sigma_[t]);
            }

            const size_t pick = rng_.pick_log_weights(logw_);
            if (pick < k) {
                labels_[i] = static_cast<int>(pick);
                clusters_[pick].cov.add_row(ds_, i);
            } else {
                Cluster fresh;
                fresh.mu = aux_mu_[pick - k];
                fresh.sigma = aux_sigma_[pick - k];
                fresh.cov = ppmx::ClusterCovStats::empty(ds_);
                fresh.cov.add_row(ds_, i);
                labels_[i] = static_cast<int>(clusters_.size());
                clusters_.push_back(std::move(fresh));
            }
        }
    }

    // Conjugate normal move for each mu_j, reflected log-walk for sigma_j.
    void update_cluster_params() {
        const size_t k = clusters_.size();
        std::vector<double> sum(k, 0.0), sumsq(k, 0.0);
        std::vector<int> n(k, 0);
        for (size_t i = 0; i < ds_.m(); ++i) {
            const int j = labels_[i];
            sum[j] += resp_[i];
            sumsq[j] += resp_[i] * resp_[i];
            ++n[j];
        }
        const double log_A = std::log(prior_.A);
        for (size_t j = 0; j < k; ++j) {
            auto& cl = clusters_[j];
            if (cfg_.prior_only) {
                cl.mu = rng_.normal(mu0_, sigma0_);
            } else {
                const double prec = 1.0 / (sigma0_ * sigma0_) + n[j] / (cl.sigma * cl.sigma);
                const double mean = (mu0_ / (sigma0_ * sigma0_) + sum[j] / (cl.sigma * cl.sigma)) / prec;
                cl.mu = rng_.normal(mean, 1.0 / std::sqrt(prec));
            }
            double ls = std::log(cl.sigma) + step_sigma_ * rng_.normal();
            if (ls > log_A) ls = 2.0 * log_A - ls;
            const double cand = std::exp(ls);
            double log_acc = std::log(cand) - std::log(cl.sigma);  // Jacobian
            if (!cfg_.prior_only) {
                log_acc += cluster_loglik(n[j], sum[j], sumsq[j], cl.mu, cand) -
                           cluster_loglik(n[j], sum[j], sumsq[j], cl.mu, cl.sigma);
            }
            ++att_sigma_;
            if (std::log(rng_.uniform_oo()) < log_acc) {
                cl.sigma = cand;
                ++acc_sigma_;
            }
        }
    }

    void update_hyperparams() {
        if (prior_.fix_hyperparams) return;
        const size_t k = clusters_.size();
        double sum_mu = 0.0;
        for (const auto& cl : clusters_) sum_mu += cl.mu;
        const double prec = 1.0 / (prior_.mu0_sd * prior_.mu0_sd) + k / (sigma0_ * sigma0_);
        const double mean =
            (prior_.mu0_mean / (prior_.mu0_sd * prior_.mu0_sd) + sum_mu / (sigma0_ * sigma0_)) / prec;
        mu0_ = rng_.normal(mean, 1.0 / std::sqrt(prec));

        const double cand = detail::reflect_into(sigma0_ + step_sigma0_ * rng_.normal(), 0.0, prior_.sigma0_max);
        if (cand > 0.0) {
            double log_acc = 0.0;
            for (const auto& cl : clusters_)
                log_acc += math::normal_logpdf(cl.mu, mu0_, cand) - math::normal_logpdf(cl.mu, mu0_, sigma0_);
            ++att_sigma0_;
            if (std::log(rng_.uniform_oo()) < log_acc) {
                sigma0_ = cand;
                ++acc_sigma0_;
            }
        }
    }

    // Truncated-normal refresh of the ordinal latents within their grade intervals.
    void update_latents() {
        for (size_t i = 0; i < ds_.m(); ++i) {
            const auto& cl = clusters_[labels_[i]];
            const auto [lo, hi] = grade_interval(ds_.y_ord[i]);
            z_[i] = rng_.truncated_normal(cl.mu, cl.sigma, lo, hi);
            resp_[i] = z_[i];
        }
    }

    std::pair<double, double> grade_interval(int g) const {
        const double lo = (g == 0) ? -std::numeric_limits<double>::infinity() : prior_.gamma[g - 1];
        const double hi = (g == ds_.n_grades - 1) ? std::numeric_limits<double>::infinity() : prior_.gamma[g];
        return {lo, hi};
    }

    DrawState snapshot() const {
        DrawState st;
        st.labels = labels_;
        st.mu.reserve(clusters_.size());
        st.sigma.reserve(clusters_.size());
        for (const auto& cl : clusters_) {
            st.mu.push_back(cl.mu);
            st.sigma.push_back(cl.sigma);
        }
        st.mu0 = mu0_;
        st.sigma0 = sigma0_;
        if (ordinal_) st.z = z_;
        return st;
    }

    const std::vector<int>& labels() const { return labels_; }
    size_t n_clusters() const { return clusters_.size(); }
    double mu0() const { return mu0_; }
    double sigma0() const { return sigma0_; }
    rng::Rng& rng() { return rng_; }

    // Burn-in step adaptation toward a 0.44 acceptance rate, frozen afterwards.
    void adapt_window() {
        if (att_sigma_ > 0) {
            const double rate = static_cast<double>(acc_sigma_) / att_sigma_;
            step_sigma_ = std::clamp(step_sigma_ * std::exp(rate - 0.44), 1e-3, 5.0);
        }
        if (att_sigma0_ > 0) {
            const double rate = static_cast<double>(acc_sigma0_) / att_sigma0_;
            step_sigma0_ = std::clamp(step_sigma0_ * std::exp(rate - 0.44), 1e-3, 5.0);
        }
        reset_counters();
    }

    void reset_counters() {
        att_sigma_ = acc_sigma_ = 0;
        att_sigma0_ = acc_sigma0_ = 0;
    }

    double accept_rate_sigma() const {
        return att_sigma_ ? static_cast<double>(acc_sigma_) / att_sigma_ : 0.0;
    }
    double accept_rate_sigma0() const {
        return att_sigma0_ ? static_cast<double>(acc_sigma0_) / att_sigma0_ : 0.0;
    }

  private:
    struct Cluster {
        double mu = 0.0, sigma = 1.0;
        ppmx::ClusterCovStats cov;
    };

    void init_state() {
        const size_t m = ds_.m();
        labels_.assign(m, 0);
        mu0_ = prior_.fix_hyperparams ? prior_.fixed_mu0 : 0.0;
        sigma0_ = prior_.fix_hyperparams ? prior_.fixed_sigma0 : std::min(1.0, 0.5 * prior_.sigma0_max);
        if (ordinal_) {
            z_.resize(m);
            for (size_t i = 0; i < m; ++i) {
                const auto [lo, hi] = grade_interval(ds_.y_ord[i]);
                if (std::isinf(lo))
                    z_[i] = hi - 0.5;
                else if (std::isinf(hi))
                    z_[i] = lo + 0.5;
                else
                    z_[i] = 0.5 * (lo + hi);
            }
            resp_ = z_;
        } else {
            resp_ = ds_.y;
        }
        Cluster c0;
        c0.mu = std::accumulate(resp_.begin(), resp_.end(), 0.0) / static_cast<double>(m);
        c0.sigma = 0.5 * prior_.A;
        c0.cov = ppmx::ClusterCovStats::empty(ds_);
        for (size_t i = 0; i < m; ++i) c0.cov.add_row(ds_, i);
        clusters_ = {c0};

        sim_tables_ = ppmx::SimTables::build(prior_.similarity, m);
        singleton_sim_.resize(m);
        auto empty_stats = ppmx::ClusterCovStats::empty(ds_);
        for (size_t i = 0; i < m; ++i)
            singleton_sim_[i] = empty_stats.delta_add_row(ds_, i, prior_.similarity);
    }

    double loglik(double y, double mu, double sigma) const {
        if (cfg_.prior_only) return 0.0;
        return math::normal_logpdf(y, mu, sigma);
    }

    static double cluster_loglik(int n, double sum, double sumsq, double mu, double sigma) {
        const double v = sigma * sigma;
        return -0.5 * n * (math::log_2pi + std::log(v)) -
               0.5 * (sumsq - 2.0 * mu * sum + n * mu * mu) / v;
    }

    // Swap-erase an emptied cluster, keeping labels contiguous.
    void drop_cluster(int j) {
        const int last = static_cast<int>(clusters_.size()) - 1;
        if (j != last) {
            clusters_[j] = std::move(clusters_[last]);
            for (auto& l : labels_)
                if (l == last) l = j;
        }
        clusters_.pop_back();
    }

    const core::Dataset& ds_;
    PriorConfig prior_;
    McmcConfig cfg_;
    rng::Rng rng_;
    bool ordinal_ = false;

    std::vector<int> labels_;
    std::vector<Cluster> clusters_;
    std::vector<double> resp_;  // y for continuous, current z for ordinal
    std::vector<double> z_;
    double mu0_ = 0.0, sigma0_ = 1.0;
    ppmx::SimTables sim_tables_;
    std::vector<double> singleton_sim_;

    double step_sigma_ = 0.5, step_sigma0_ = 0.5;
    long att_sigma_ = 0, acc_sigma_ = 0;
    long att_sigma0_ = 0, acc_sigma0_ = 0;

    std::vector<double> logw_, aux_mu_, aux_sigma_;
};

inline PosteriorDraws run_mcmc(const core::Dataset& ds, const PriorConfig& prior, const McmcConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    Chain chain(ds, prior, cfg);
    PosteriorDraws out;
    out.m = ds.m();
    out.ordinal = ds.response_kind == core::ResponseKind::ordinal;
    out.n_grades = ds.n_grades;
    out.gamma = prior.gamma;
    out.seed = cfg.seed;
    out.states.reserve((cfg.n_iter - cfg.burn_in) / cfg.thin + 1);

    constexpr int adapt_window = 50;
    for (int t = 1; t <= cfg.n_iter; ++t) {
        chain.sweep();
        if (t <= cfg.burn_in) {
            if (t % adapt_window == 0) chain.adapt_window();
            if (t == cfg.burn_in) chain.reset_counters();
        } else if ((t - cfg.burn_in) % cfg.thin == 0) {
            out.states.push_back(chain.snapshot());
        }
    }
    out.accept_sigma = chain.accept_rate_sigma();
    out.accept_sigma0 = chain.accept_rate_sigma0();
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct LpmlResult {
    double lpml = 0.0;
    std::vector<double> log_cpo;
};

// Per-point log densities under one draw; ordinal uses the grade interval mass.
inline double point_log_density(const core::Dataset& ds, const PosteriorDraws& draws,
                                const DrawState& st, size_t i) {
    const int j = st.labels[i];
    const double mu = st.mu[j], sigma = st.sigma[j];
    if (!draws.ordinal) return math::normal_logpdf(ds.y[i], mu, sigma);
    const int g = ds.y_ord[i];
    const double lo = (g == 0) ? -std::numeric_limits<double>::infinity() : draws.gamma[g - 1];
    const double hi = (g == draws.n_grades - 1) ? std::numeric_limits<double>::infinity() : draws.gamma[g];
    const double p = math::normal_cdf((hi - mu) / sigma) - math::normal_cdf((lo - mu) / sigma);
    return std::log(std::max(p, 1e-300));
}

// LPML = sum_i log CPO_i with CPO_i the harmonic mean of per-draw densities,
// evaluated in log space.
inline LpmlResult compute_lpml(const core::Dataset& ds, const PosteriorDraws& draws) {
    const size_t m = ds.m();
    const size_t T = draws.states.size();
    if (T == 0) throw core::ValidationError("lpml needs at least one retained draw");
    LpmlResult res;
    res.log_cpo.resize(m);
    std::vector<double> neg(T);
    for (size_t i = 0; i < m; ++i) {
        for (size_t t = 0; t < T; ++t) neg[t] = -point_log_density(ds, draws, draws.states[t], i);
        res.log_cpo[i] = std::log(static_cast<double>(T)) - math::log_sum_exp(neg);
        res.lpml += res.log_cpo[i];
    }
    return res;
}

}  // namespace raid::sampler
