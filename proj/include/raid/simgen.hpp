// Synthetic data generators and the simulation-study harness.
//
// Toy family: three binary covariates, response distribution keyed by
// (X1, X2):
//   f0: N(0,1) everywhere (null)
//   f1: N(0,1) / N(2,1) / N(4,1)          (mean shifts)
//   f2: N(0,1) / N(0,3) / N(0,6)          (sd changes)
//   f3: N(0,1) / skew-normal / two-point normal mixture (shape changes)
// The skew-normal keeps shape 20 and is moment-standardized to mean 0,
// variance 1 by default, so only the shape carries the interaction; the
// raw location/scale parameterization stays available as an override.
//
// Larger family: 21 covariates with a planted (X1, X2) interaction of a
// declared mechanism (mean, spread, shape) and covariate kind; sigma scales
// every normal's standard deviation; a dilution fraction keeps only that
// share of rows on the interaction response, the rest drawn from N(0,1).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "raid/core.hpp"
#include "raid/math.hpp"
#include "raid/parallel.hpp"
#include "raid/ppmx.hpp"
#include "raid/ptest.hpp"
#include "raid/rng.hpp"
#include "raid/rules.hpp"
#include "raid/sampler.hpp"

namespace raid::simgen {

enum class ToyScenario { f0, f1, f2, f3 };

inline const char* to_string(ToyScenario s) {
    switch (s) {
        case ToyScenario::f0: return "f0";
        case ToyScenario::f1: return "f1";
        case ToyScenario::f2: return "f2";
        default: return "f3";
    }
}

struct SkewNormalSpec {
    bool standardized = true;  // mean 0, variance 1; shape only
    double location = 10.0;    // used verbatim when standardized == false
    double scale = 1.0;
    double shape = 20.0;
};

// delta-scaled absolute-normal representation of the skew normal.
inline double draw_skew_normal(rng::Rng& rng, const SkewNormalSpec& sn) {
    const double delta = sn.shape / std::sqrt(1.0 + sn.shape * sn.shape);
    const double u0 = rng.normal();
    const double v = rng.normal();
    const double u1 = delta * std::fabs(u0) + std::sqrt(1.0 - delta * delta) * v;
    if (!sn.standardized) return sn.location + sn.scale * u1;
    const double mu = delta * std::sqrt(2.0 / math::pi);
    const double sd = std::sqrt(1.0 - 2.0 * delta * delta / math::pi);
    return (u1 - mu) / sd;
}

namespace detail {

inline core::ColumnSpec binary_col(const std::string& name) {
    return core::ColumnSpec{name, core::ColumnKind::categorical, {"0", "1"}};
}

// Two-point normal mixture with means +-sqrt(15)/4, component variance 1/16:
// overall mean 0 and variance 1.
inline double draw_bimodal(rng::Rng& rng, double sd_scale) {
    const double mean = std::sqrt(15.0) / 4.0;
    const double m = rng.bernoulli(0.5) ? mean : -mean;
    return rng.normal(m, 0.25 * sd_scale);
}

}  // namespace detail

inline core::Dataset gen_toy(ToyScenario scenario, int n, uint64_t seed,
                             const SkewNormalSpec& sn = {}) {
    rng::Rng rng(seed);
    core::Dataset ds;
    ds.response_kind = core::ResponseKind::continuous;
    for (int c = 1; c <= 3; ++c) ds.cols.push_back({detail::binary_col("X" + std::to_string(c)), {}, {}});
    ds.y.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int x1 = rng.bernoulli(0.5) ? 1 : 0;
        const int x2 = rng.bernoulli(0.5) ? 1 : 0;
        const int x3 = rng.bernoulli(0.5) ? 1 : 0;
        ds.cols[0].codes.push_back(x1);
        ds.cols[1].codes.push_back(x2);
        ds.cols[2].codes.push_back(x3);
        double y;
        switch (scenario) {
            case ToyScenario::f0:
                y = rng.normal();
                break;
            case ToyScenario::f1:
                y = (x2 == 1) ? rng.normal(0.0, 1.0) : (x1 == 1 ? rng.normal(2.0, 1.0) : rng.normal(4.0, 1.0));
                break;
            case ToyScenario::f2:
                y = (x2 == 1) ? rng.normal(0.0, 1.0) : (x1 == 1 ? rng.normal(0.0, 3.0) : rng.normal(0.0, 6.0));
                break;
            default:
                if (x2 == 1)
                    y = rng.normal();
                else if (x1 == 1)
                    y = draw_skew_normal(rng, sn);
                else
                    y = detail::draw_bimodal(rng, 1.0);
                break;
        }
        ds.y.push_back(y);
    }
    ds.validate();
    return ds;
}

enum class OsteoMechanism { mean, spread, shape };
enum class CovariateKind { continuous, categorical };

inline const char* to_string(OsteoMechanism m) {
    switch (m) {
        case OsteoMechanism::mean: return "mean";
        case OsteoMechanism::spread: return "spread";
        default: return "shape";
    }
}

inline const char* to_string(CovariateKind k) {
    return k == CovariateKind::continuous ? "continuous" : "categorical";
}

struct OsteoSpec {
    OsteoMechanism mechanism = OsteoMechanism::mean;
    CovariateKind kind = CovariateKind::continuous;
    double sigma = 1.0;
    double fraction = 1.0;  // share of rows carrying the interaction response
    int n = 500;
};

// 21 covariates; the interacting pair (X1, X2) has the declared kind.
// Continuous kind: X1..X19 ~ U(-1,1), X20/X21 ~ Bernoulli(0.5).
// Categorical kind: X1, X2 ~ Bernoulli(0.5), X3..X21 ~ U(-1,1);
// the response reuses the toy table with every sd scaled by sigma.
inline core::Dataset gen_osteo(const OsteoSpec& spec, uint64_t seed, const SkewNormalSpec& sn = {}) {
    if (!(spec.fraction > 0.0 && spec.fraction <= 1.0))
        throw core::ValidationError("osteo fraction must be in (0,1]");
    if (!(spec.sigma > 0.0)) throw core::ValidationError("osteo sigma must be > 0");
    rng::Rng rng(seed);
    core::Dataset ds;
    ds.response_kind = core::ResponseKind::continuous;
    const bool cat_pair = spec.kind == CovariateKind::categorical;
    for (int c = 1; c <= 21; ++c) {
        const std::string name = "X" + std::to_string(c);
        const bool is_cat = cat_pair ? (c <= 2) : (c >= 20);
        if (is_cat)
            ds.cols.push_back({detail::binary_col(name), {}, {}});
        else
            ds.cols.push_back({core::ColumnSpec{name, core::ColumnKind::continuous, {}}, {}, {}});
    }
    ds.y.reserve(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        double x1 = 0.0, x2 = 0.0;
        for (size_t c = 0; c < ds.cols.size(); ++c) {
            double v;
            if (ds.cols[c].spec.kind == core::ColumnKind::categorical) {
                const int code = rng.bernoulli(0.5) ? 1 : 0;
                ds.cols[c].codes.push_back(code);
                v = code;
            } else {
                v = rng.uniform(-1.0, 1.0);
                ds.cols[c].values.push_back(v);
            }
            if (c == 0) x1 = v;
            if (c == 1) x2 = v;
        }
        double y;
        if (cat_pair) {
            const int a = static_cast<int>(x1), b = static_cast<int>(x2);
            switch (spec.mechanism) {
                case OsteoMechanism::mean:
                    y = (b == 1) ? rng.normal(0.0, spec.sigma)
                                 : (a == 1 ? rng.normal(2.0, spec.sigma) : rng.normal(4.0, spec.sigma));
                    break;
                case OsteoMechanism::spread:
                    y = (b == 1) ? rng.normal(0.0, spec.sigma)
                                 : (a == 1 ? rng.normal(0.0, 3.0 * spec.sigma)
                                           : rng.normal(0.0, 6.0 * spec.sigma));
                    break;
                default:
                    if (b == 1)
                        y = rng.normal(0.0, spec.sigma);
                    else if (a == 1)
                        y = spec.sigma * draw_skew_normal(rng, sn);
                    else
                        y = detail::draw_bimodal(rng, spec.sigma) * 1.0;
                    break;
            }
        } else {
            const double prod = x1 * x2;
            switch (spec.mechanism) {
                case OsteoMechanism::mean:
                    y = rng.normal(5.0 * prod, spec.sigma);
                    break;
                case OsteoMechanism::spread:
                    y = rng.normal(0.0, std::exp(5.0 * prod) * spec.sigma);
                    break;
                default: {
                    const double pi_mix = 1.0 / (1.0 + std::exp(200.0 * prod));
                    if (rng.uniform() < pi_mix)
                        y = rng.normal(0.0, spec.sigma);
                    else
                        y = rng.bernoulli(0.5) ? rng.normal(-0.5, spec.sigma) : rng.normal(0.5, spec.sigma);
                    break;
                }
            }
        }
        ds.y.push_back(y);
    }
    if (spec.fraction < 1.0) {
        const int replace = static_cast<int>(std::llround((1.0 - spec.fraction) * spec.n));
        std::vector<size_t> idx(spec.n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        for (int r = 0; r < replace; ++r) ds.y[idx[r]] = rng.normal();
    }
    ds.validate();
    return ds;
}

// Semi-synthetic ordinal data from the latent threshold model with a planted
// multiplicative (X1, X2) effect on the latent mean.
struct OrdinalPlantSpec {
    int n = 200;
    int n_grades = 5;
    std::vector<double> gamma = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    double base = 0.15;
    double effect = 0.7;
    double latent_sd = 0.12;
};

inline core::Dataset gen_ordinal_planted(const OrdinalPlantSpec& spec, uint64_t seed) {
    rng::Rng rng(seed);
    core::Dataset ds;
    ds.response_kind = core::ResponseKind::ordinal;
    ds.n_grades = spec.n_grades;
    ds.cols.push_back({detail::binary_col("X1"), {}, {}});
    ds.cols.push_back({detail::binary_col("X2"), {}, {}});
    ds.cols.push_back({detail::binary_col("X3"), {}, {}});
    ds.cols.push_back({core::ColumnSpec{"X4", core::ColumnKind::continuous, {}}, {}, {}});
    ds.cols.push_back({core::ColumnSpec{"X5", core::ColumnKind::continuous, {}}, {}, {}});
    for (int i = 0; i < spec.n; ++i) {
        const int x1 = rng.bernoulli(0.5) ? 1 : 0;
        const int x2 = rng.bernoulli(0.5) ? 1 : 0;
        ds.cols[0].codes.push_back(x1);
        ds.cols[1].codes.push_back(x2);
        ds.cols[2].codes.push_back(rng.bernoulli(0.5) ? 1 : 0);
        ds.cols[3].values.push_back(rng.uniform(-1.0, 1.0));
        ds.cols[4].values.push_back(rng.uniform(-1.0, 1.0));
        const double z = spec.base + spec.effect * x1 * x2 + rng.normal(0.0, spec.latent_sd);
        int g = 0;
        while (g < spec.n_grades - 1 && z > spec.gamma[g]) ++g;
        ds.y_ord.push_back(g);
    }
    ds.validate();
    return ds;
}

// ---- Saturated two-way linear-model baseline ----

struct LmInteraction {
    int col_a = 0, col_b = 0;
    double t_stat = 0.0;
    double p_value = 1.0;
};

struct LmResult {
    std::vector<LmInteraction> interactions;  // min-p entry per column pair
    std::vector<std::pair<int, int>> detected(double alpha) const {
        std::vector<std::pair<int, int>> out;
        for (const auto& it : interactions)
            if (it.p_value < alpha) out.emplace_back(it.col_a, it.col_b);
        return out;
    }
};

// OLS on main effects plus all two-way interactions; each interaction
// coefficient gets a t-test. A rank-deficient design is an error naming the
// aliased columns.
inline LmResult lm_detect(const core::Dataset& ds) {
    if (ds.response_kind != core::ResponseKind::continuous)
        throw core::ValidationError("lm_detect needs a continuous response");
    ds.validate();
    const size_t n = ds.m();
    // Coded main-effect columns: continuous as-is, categorical as L-1 dummies.
    std::vector<Eigen::VectorXd> coded;
    std::vector<int> coded_col;
    std::vector<std::string> coded_name;
    for (size_t c = 0; c < ds.p(); ++c) {
        const auto& col = ds.cols[c];
        if (col.spec.kind == core::ColumnKind::continuous) {
            Eigen::VectorXd v(n);
            for (size_t i = 0; i < n; ++i) v(i) = col.values[i];
            coded.push_back(std::move(v));
            coded_col.push_back(static_cast<int>(c));
            coded_name.push_back(col.spec.name);
        } else {
            for (size_t l = 1; l < col.spec.levels.size(); ++l) {
                Eigen::VectorXd v(n);
                for (size_t i = 0; i < n; ++i) v(i) = col.codes[i] == static_cast<int>(l) ? 1.0 : 0.0;
                coded.push_back(std::move(v));
                coded_col.push_back(static_cast<int>(c));
                coded_name.push_back(col.spec.name + "=" + col.spec.levels[l]);
            }
        }
    }
    struct Term {
        Eigen::VectorXd v;
        std::string name;
        int pair_a = -1, pair_b = -1;  // -1 for main effects
    };
    std::vector<Term> terms;
    for (size_t a = 0; a < coded.size(); ++a) terms.push_back({coded[a], coded_name[a], -1, -1});
    for (size_t a = 0; a < coded.size(); ++a) {
        for (size_t b = a + 1; b < coded.size(); ++b) {
            if (coded_col[a] == coded_col[b]) continue;
            terms.push_back({coded[a].cwiseProduct(coded[b]), coded_name[a] + ":" + coded_name[b],
                             std::min(coded_col[a], coded_col[b]), std::max(coded_col[a], coded_col[b])});
        }
    }
    const size_t q = terms.size() + 1;
    if (n <= q) throw core::ValidationError("lm_detect: more coefficients than rows");
    Eigen::MatrixXd X(n, q);
    X.col(0).setOnes();
    for (size_t t = 0; t < terms.size(); ++t) X.col(t + 1) = terms[t].v;
    Eigen::VectorXd y(n);
    for (size_t i = 0; i < n; ++i) y(i) = ds.y[i];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(q)) {
        const auto perm = qr.colsPermutation().indices();
        std::string aliased;
        for (Eigen::Index r = qr.rank(); r < perm.size(); ++r) {
            const Eigen::Index colix = perm(r);
            if (!aliased.empty()) aliased += ", ";
            aliased += colix == 0 ? "(intercept)" : terms[colix - 1].name;
        }
        throw core::ValidationError("lm_detect: singular design; aliased columns: " + aliased);
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * beta;
    const double df = static_cast<double>(n - q);
    const double s2 = resid.squaredNorm() / df;
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(q, q));

    std::map<std::pair<int, int>, LmInteraction> best;
    for (size_t t = 0; t < terms.size(); ++t) {
        if (terms[t].pair_a < 0) continue;
        const double se = std::sqrt(s2 * xtx_inv(t + 1, t + 1));
        const double tstat = beta(t + 1) / se;
        const double p = math::student_t_pvalue(tstat, df);
        const auto key = std::make_pair(terms[t].pair_a, terms[t].pair_b);
        auto it = best.find(key);
        if (it == best.end() || p < it->second.p_value)
            best[key] = LmInteraction{key.first, key.second, tstat, p};
    }
    LmResult res;
    for (const auto& [key, li] : best) res.interactions.push_back(li);
    return res;
}

// ---- Analysis pipeline: fit, mine, aggregate, test ----

enum class CandidateMode { modal_top_pair, pr_threshold };

struct AnalysisConfig {
    sampler::PriorConfig prior;
    sampler::McmcConfig mcmc;
    rules::MiningConfig mining;
    ptest::TestConfig test;
    int bins = 2;
    bool standardize_response = true;
    CandidateMode candidate_mode = CandidateMode::pr_threshold;
    double pr_threshold = 0.5;
};

struct AnalysisResult {
    sampler::PosteriorDraws draws;
    std::vector<rules::PairSummary> summaries;
    std::vector<rules::TopShare> top_shares;
    std::vector<rules::ColumnPair> candidates;
    std::map<rules::ColumnPair, ptest::TestReport> tests;
    double lpml = 0.0;
    double mean_clusters = 0.0;
    core::Dataset prepared;  // standardized copy used for the fit
    core::DiscretizedView view;
};

inline AnalysisResult run_analysis(const core::Dataset& raw, const AnalysisConfig& cfg,
                                   std::vector<rules::ColumnPair> forced_tests = {}) {
    AnalysisResult res;
    res.prepared = raw;
    const bool std_resp = cfg.standardize_response &&
                          raw.response_kind == core::ResponseKind::continuous;
    core::standardize(res.prepared, std_resp);
    res.draws = sampler::run_mcmc(res.prepared, cfg.prior, cfg.mcmc);
    res.lpml = sampler::compute_lpml(res.prepared, res.draws).lpml;
    res.mean_clusters = res.draws.mean_clusters();
    res.view = core::discretize(res.prepared, cfg.bins);

    std::vector<rules::IterateRules> iterates;
    iterates.reserve(res.draws.states.size());
    for (const auto& st : res.draws.states)
        iterates.push_back(rules::mine_iterate(res.view, st.labels, cfg.mining));
    res.summaries = rules::aggregate(res.view, iterates);
    res.top_shares = rules::modal_top_pairs(res.view, iterates);
    if (cfg.candidate_mode == CandidateMode::modal_top_pair) {
        for (const auto& ts : res.top_shares) res.candidates.push_back(ts.pair);
    } else {
        for (const auto& s : rules::candidates_by_threshold(res.summaries, cfg.pr_threshold))
            res.candidates.push_back(s.pair);
    }

    std::vector<rules::ColumnPair> to_test = res.candidates;
    for (const auto& pr : forced_tests)
        if (std::find(to_test.begin(), to_test.end(), pr) == to_test.end()) to_test.push_back(pr);
    if (!to_test.empty()) {
        const auto cache = ptest::StateCache::build(res.prepared, res.draws, cfg.prior);
        for (const auto& pr : to_test) {
            rng::Rng trng(rng::derive_seed(cfg.mcmc.seed, "ptest/" + std::to_string(pr.a) + "," +
                                                              std::to_string(pr.b)));
            const std::array<int, 2> cols{pr.a, pr.b};
            res.tests[pr] = ptest::test_interaction(cache, res.prepared, res.view, cols, cfg.test, trng);
        }
    }
    return res;
}

// ---- Study harness ----

struct ToyStudyConfig {
    std::vector<ToyScenario> scenarios = {ToyScenario::f0, ToyScenario::f1, ToyScenario::f2,
                                          ToyScenario::f3};
    int n = 500;
    int replicates = 50;
    uint64_t master_seed = 20260817;
    AnalysisConfig analysis;
    SkewNormalSpec sn;
    double p_cut = 0.01;
    double lm_alpha = 0.01;
    bool run_lm = true;
    bool ht1_all_pairs = false;  // force tests of all three column pairs
    int workers = 1;
};

struct ToyCellOutcome {
    ToyScenario scenario;
    int replicate = 0;
    std::vector<rules::ColumnPair> candidates;
    bool raid_detected = false;  // any candidate pair with average p below the cut
    bool raid_detected_planted = false;
    std::map<rules::ColumnPair, double> avg_p;  // tested pairs
    std::vector<std::pair<int, int>> lm_pairs;
    bool lm_detected_planted = false;
    double mean_clusters = 0.0;
};

struct ToyStudyResult {
    std::vector<ToyCellOutcome> cells;

    double detection_rate(ToyScenario s) const {
        int n = 0, d = 0;
        for (const auto& c : cells)
            if (c.scenario == s) {
                ++n;
                d += (s == ToyScenario::f0 ? c.raid_detected : c.raid_detected_planted) ? 1 : 0;
            }
        return n ? static_cast<double>(d) / n : 0.0;
    }

    double lm_rate(ToyScenario s) const {
        int n = 0, d = 0;
        for (const auto& c : cells)
            if (c.scenario == s) {
                ++n;
                d += c.lm_detected_planted ? 1 : 0;
            }
        return n ? static_cast<double>(d) / n : 0.0;
    }

    // Average test p-value of one pair across a scenario's replicates.
    double average_p(ToyScenario s, rules::ColumnPair pair) const {
        double sum = 0.0;
        int n = 0;
        for (const auto& c : cells) {
            if (c.scenario != s) continue;
            auto it = c.avg_p.find(pair);
            if (it != c.avg_p.end()) {
                sum += it->second;
                ++n;
            }
        }
        return n ? sum / n : 1.0;
    }
};

inline ToyCellOutcome run_toy_cell(const ToyStudyConfig& cfg, ToyScenario scenario, int rep) {
    const std::string key = std::string("toy/") + to_string(scenario) + "/rep" + std::to_string(rep);
    const uint64_t data_seed = rng::derive_seed(cfg.master_seed, key + "/data");
    auto ds = gen_toy(scenario, cfg.n, data_seed, cfg.sn);

    AnalysisConfig acfg = cfg.analysis;
    acfg.mcmc.seed = rng::derive_seed(cfg.master_seed, key + "/mcmc");
    std::vector<rules::ColumnPair> forced;
    if (cfg.ht1_all_pairs) forced = {{0, 1}, {0, 2}, {1, 2}};
    auto res = run_analysis(ds, acfg, forced);

    ToyCellOutcome out;
    out.scenario = scenario;
    out.replicate = rep;
    out.candidates = res.candidates;
    out.mean_clusters = res.mean_clusters;
    for (const auto& [pair, report] : res.tests) out.avg_p[pair] = report.average_p;
    const rules::ColumnPair planted{0, 1};
    for (const auto& cand : res.candidates) {
        const double p = res.tests.at(cand).average_p;
        if (p < cfg.p_cut) {
            out.raid_detected = true;
            if (cand == planted) out.raid_detected_planted = true;
        }
    }
    if (cfg.run_lm) {
        const auto lm = lm_detect(ds);
        out.lm_pairs = lm.detected(cfg.lm_alpha);
        for (const auto& [a, b] : out.lm_pairs)
            if (a == 0 && b == 1) out.lm_detected_planted = true;
    }
    return out;
}

inline ToyStudyResult run_toy_study(const ToyStudyConfig& cfg) {
    std::vector<std::pair<ToyScenario, int>> cells;
    for (auto s : cfg.scenarios)
        for (int r = 0; r < cfg.replicates; ++r) cells.emplace_back(s, r);
    ToyStudyResult res;
    res.cells.resize(cells.size());
    par::parallel_for(cells.size(), cfg.workers, [&](size_t i) {
        res.cells[i] = run_toy_cell(cfg, cells[i].first, cells[i].second);
    });
    return res;
}

struct OsteoStudyConfig {
    std::vector<OsteoMechanism> mechanisms = {OsteoMechanism::mean, OsteoMechanism::spread,
                                              OsteoMechanism::shape};
    std::vector<CovariateKind> kinds = {CovariateKind::continuous, CovariateKind::categorical};
    std::vector<double> sigmas = {1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> fractions = {1.0};
    int n = 500;
    int replicates = 10;
    uint64_t master_seed = 20260817;
    AnalysisConfig analysis;
    SkewNormalSpec sn;
    double p_cut = 0.01;
    int workers = 1;
};

struct OsteoCellOutcome {
    OsteoSpec spec;
    int replicate = 0;
    bool tp = false;        // planted pair identified and confirmed
    int fp = 0;             // other confirmed pairs
    int fp_relaxed = 0;     // confirmed pairs sharing no column with the planted pair
    double mean_clusters = 0.0;
};

struct OsteoStudyResult {
    std::vector<OsteoCellOutcome> cells;
};

inline OsteoCellOutcome run_osteo_cell(const OsteoStudyConfig& cfg, const OsteoSpec& spec, int rep) {
    const std::string key = std::string("osteo/") + to_string(spec.mechanism) + "/" +
                            to_string(spec.kind) + "/s" + std::to_string(spec.sigma) + "/f" +
                            std::to_string(spec.fraction) + "/rep" + std::to_string(rep);
    auto ds = gen_osteo(spec, rng::derive_seed(cfg.master_seed, key + "/data"), cfg.sn);
    AnalysisConfig acfg = cfg.analysis;
    acfg.mcmc.seed = rng::derive_seed(cfg.master_seed, key + "/mcmc");
    auto res = run_analysis(ds, acfg);

    OsteoCellOutcome out;
    out.spec = spec;
    out.replicate = rep;
    out.mean_clusters = res.mean_clusters;
    const rules::ColumnPair planted{0, 1};
    for (const auto& cand : res.candidates) {
        if (res.tests.at(cand).average_p >= cfg.p_cut) continue;
        if (cand == planted) {
            out.tp = true;
        } else {
            ++out.fp;
            if (cand.a != 0 && cand.a != 1 && cand.b != 0 && cand.b != 1) ++out.fp_relaxed;
        }
    }
    return out;
}

inline OsteoStudyResult run_osteo_study(const OsteoStudyConfig& cfg) {
    std::vector<std::pair<OsteoSpec, int>> cells;
    for (auto m : cfg.mechanisms)
        for (auto k : cfg.kinds)
            for (double s : cfg.sigmas)
                for (double f : cfg.fractions)
                    for (int r = 0; r < cfg.replicates; ++r)
                        cells.emplace_back(OsteoSpec{m, k, s, f, cfg.n}, r);
    OsteoStudyResult res;
    res.cells.resize(cells.size());
    par::parallel_for(cells.size(), cfg.workers, [&](size_t i) {
        res.cells[i] = run_osteo_cell(cfg, cells[i].first, cells[i].second);
    });
    return res;
}

}  // namespace raid::simgen
