#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "raid/core.hpp"
#include "raid/math.hpp"
#include "raid/ppmx.hpp"
#include "raid/ptest.hpp"
#include "raid/rng.hpp"
#include "raid/sampler.hpp"

using namespace raid;
using core::ColumnKind;
using core::ColumnSpec;

TEST_CASE("tree depth follows the pooled size with a hard cap") {
    ptest::PolyaTreeConfig cfg;
    CHECK(ptest::tree_depth(2, cfg) == 1);
    CHECK(ptest::tree_depth(100, cfg) == 7);
    CHECK(ptest::tree_depth(256, cfg) == 8);
    CHECK(ptest::tree_depth(5000, cfg) == 8);
}

TEST_CASE("leaf indices cut the standardized sample at normal quantiles") {
    std::vector<double> pooled{-10.0, 0.0, 10.0};  // standardizes to -1, 0, 1
    const auto idx = ptest::leaf_indices(pooled, 2);
    CHECK(idx == std::vector<int>{0, 2, 3});

    std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
    const auto deg = ptest::leaf_indices(flat, 3);
    for (int l : deg) CHECK(l == deg[0]);
}

TEST_CASE("single-level marginal reduces to a beta-binomial ratio") {
    const auto tab = ptest::detail::PtTables::build(1, 3, 1.0);
    std::vector<int> counts{2, 1};
    // a = c*1^2 = 1: lgamma(1+2)+lgamma(1+1)-lgamma(2+3) minus the empty term
    const double expect = std::lgamma(3.0) + std::lgamma(2.0) - std::lgamma(5.0) -
                          (2.0 * std::lgamma(1.0) - std::lgamma(2.0));
    CHECK(ptest::detail::log_marginal(counts, tab) == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("two-level marginal matches a direct transcription") {
    const double c = 1.3;
    const auto tab = ptest::detail::PtTables::build(2, 3, c);
    std::vector<int> counts{1, 0, 2, 0};
    const double a2 = c * 4.0, a1 = c;
    double expect = 0.0;
    expect += std::lgamma(a2 + 1) + std::lgamma(a2 + 0) - std::lgamma(2 * a2 + 1) -
              (2 * std::lgamma(a2) - std::lgamma(2 * a2));
    expect += std::lgamma(a2 + 2) + std::lgamma(a2 + 0) - std::lgamma(2 * a2 + 2) -
              (2 * std::lgamma(a2) - std::lgamma(2 * a2));
    expect += std::lgamma(a1 + 1) + std::lgamma(a1 + 2) - std::lgamma(2 * a1 + 3) -
              (2 * std::lgamma(a1) - std::lgamma(2 * a1));
    CHECK(ptest::detail::log_marginal(counts, tab) == Catch::Approx(expect).margin(1e-12));

    // empty branches contribute nothing
    std::vector<int> empty{0, 0, 0, 0};
    CHECK(ptest::detail::log_marginal(empty, tab) == 0.0);
}

TEST_CASE("permutation test is deterministic, bounded, and powered") {
    Rng gen(2);
    std::vector<std::vector<double>> null_groups(2);
    for (int g = 0; g < 2; ++g)
        for (int i = 0; i < 60; ++i) null_groups[g].push_back(gen.normal());

    Rng r1(5), r2(5);
    const auto a = ptest::permutation_test(null_groups, 199, r1);
    const auto b = ptest::permutation_test(null_groups, 199, r2);
    CHECK(a.p_value == b.p_value);
    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value >= 1.0 / 200.0);
    CHECK(a.p_value <= 1.0);
    CHECK(a.depth == 7);  // pooled 120

    std::vector<std::vector<double>> shifted(2);
    for (int i = 0; i < 60; ++i) {
        shifted[0].push_back(gen.normal());
        shifted[1].push_back(2.0 + gen.normal());
    }
    Rng r3(6);
    const auto pw = ptest::permutation_test(shifted, 199, r3);
    CHECK(pw.p_value < 0.05);

    std::vector<std::vector<double>> one{{1.0, 2.0}};
    Rng r4(7);
    CHECK_THROWS_AS(ptest::permutation_test(one, 10, r4), core::ValidationError);
}

TEST_CASE("constant pooled sample yields p = 1") {
    std::vector<std::vector<double>> flat{{3.0, 3.0, 3.0}, {3.0, 3.0, 3.0}};
    Rng rng(9);
    const auto res = ptest::permutation_test(flat, 99, rng);
    CHECK(res.p_value == 1.0);
}

TEST_CASE("null rejection rate is near nominal") {
    Rng gen(77);
    int reject = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<std::vector<double>> groups(2);
        for (int g = 0; g < 2; ++g)
            for (int i = 0; i < 40; ++i) groups[g].push_back(gen.normal());
        Rng perm(1000 + rep);
        const auto res = ptest::permutation_test(groups, 99, perm);
        if (res.p_value <= 0.05) ++reject;
    }
    const double rate = reject / static_cast<double>(reps);
    INFO("null rejection rate " << rate);
    CHECK(rate >= 0.005);
    CHECK(rate <= 0.105);
}

namespace {

core::Dataset ordinal_ds4() {
    core::Dataset ds;
    ds.response_kind = core::ResponseKind::ordinal;
    ds.n_grades = 5;
    ds.y_ord = {0, 1, 2, 3};
    ds.cols.push_back(core::Column{ColumnSpec{"X1", ColumnKind::categorical, {"0", "1"}},
                                   {},
                                   {0, 1, 0, 1}});
    return ds;
}

}  // namespace

TEST_CASE("grade probabilities reduce to interval masses for one cluster") {
    const auto ds = ordinal_ds4();
    sampler::PosteriorDraws draws;
    draws.m = 4;
    draws.ordinal = true;
    draws.n_grades = 5;
    draws.gamma = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    sampler::DrawState st;
    st.labels = {0, 0, 0, 0};
    st.mu = {0.0};
    st.sigma = {1.0};
    st.mu0 = 0.0;
    st.sigma0 = 1.0;
    draws.states = {st};

    sampler::PriorConfig prior;
    prior.cohesion = {ppmx::CohesionKind::dp, 1e-12};  // suppress the fresh-cluster mass
    prior.A = 0.1;

    const auto cache = ptest::StateCache::build(ds, draws, prior);
    const auto x0 = ppmx::CovariateRow::all_absent(ds.p());
    Rng rng(3);
    const auto probs = ptest::grade_probabilities(cache, x0, 7, rng);
    REQUIRE(probs.size() == 5);
    const double c13 = math::normal_cdf(1.0 / 3.0);
    const double c23 = math::normal_cdf(2.0 / 3.0);
    const double c1 = math::normal_cdf(1.0);
    CHECK(probs[0] == Catch::Approx(0.5).margin(1e-10));
    CHECK(probs[1] == Catch::Approx(c13 - 0.5).margin(1e-10));
    CHECK(probs[2] == Catch::Approx(c23 - c13).margin(1e-10));
    CHECK(probs[3] == Catch::Approx(c1 - c23).margin(1e-10));
    CHECK(probs[4] == Catch::Approx(1.0 - c1).margin(1e-10));
    double total = 0.0;
    for (double p : probs) total += p;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("grade probabilities require an ordinal fit") {
    core::Dataset ds;
    ds.y = {0.1, 0.2};
    ds.cols.push_back(core::Column{ColumnSpec{"X1", ColumnKind::categorical, {"0", "1"}}, {}, {0, 1}});
    sampler::PosteriorDraws draws;
    draws.m = 2;
    sampler::DrawState st;
    st.labels = {0, 0};
    st.mu = {0.0};
    st.sigma = {1.0};
    draws.states = {st};
    const auto cache = ptest::StateCache::build(ds, draws, sampler::PriorConfig{});
    Rng rng(1);
    const auto x0 = ppmx::CovariateRow::all_absent(1);
    CHECK_THROWS_AS(ptest::grade_probabilities(cache, x0, 3, rng), core::ValidationError);
}

TEST_CASE("allocation weights are a distribution that tracks similarity") {
    core::Dataset ds;
    ds.y = {0, 0, 0, 0, 0, 0};
    ds.cols.push_back(core::Column{ColumnSpec{"X1", ColumnKind::categorical, {"0", "1"}},
                                   {},
                                   {0, 0, 0, 1, 1, 1}});
    sampler::PosteriorDraws draws;
    draws.m = 6;
    sampler::DrawState st;
    st.labels = {0, 0, 0, 1, 1, 1};
    st.mu = {-1.0, 1.0};
    st.sigma = {0.5, 0.5};
    draws.states = {st};
    sampler::PriorConfig prior;

    const auto cache = ptest::StateCache::build(ds, draws, prior);
    auto x0 = ppmx::CovariateRow::all_absent(1);
    x0.present[0] = true;
    x0.cat[0] = 0;
    const auto w = cache.allocation_weights(0, x0);
    REQUIRE(w.size() == 3);
    double total = 0.0;
    for (double v : w) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    CHECK(w[0] > w[1]);  // matching level favors the matching cluster

    x0.cat[0] = 1;
    const auto w2 = cache.allocation_weights(0, x0);
    CHECK(w2[1] > w2[0]);
}

TEST_CASE("predictive draws follow the located component") {
    core::Dataset ds;
    ds.y = {0, 0, 0, 0};
    ds.cols.push_back(core::Column{ColumnSpec{"X1", ColumnKind::categorical, {"0", "1"}},
                                   {},
                                   {0, 1, 0, 1}});
    sampler::PosteriorDraws draws;
    draws.m = 4;
    sampler::DrawState st;
    st.labels = {0, 0, 0, 0};
    st.mu = {2.0};
    st.sigma = {0.5};
    draws.states = {st};
    sampler::PriorConfig prior;
    prior.cohesion = {ppmx::CohesionKind::dp, 1e-12};

    const auto cache = ptest::StateCache::build(ds, draws, prior);
    const auto x0 = ppmx::CovariateRow::all_absent(1);
    Rng rng(17);
    const int n = 20000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = ptest::predictive_draw(cache, x0, rng);
        s += d;
        s2 += d * d;
    }
    const double mean = s / n;
    CHECK(mean == Catch::Approx(2.0).margin(0.02));
    CHECK(std::sqrt(s2 / n - mean * mean) == Catch::Approx(0.5).margin(0.01));
}

namespace {

core::Dataset four_col_ds() {
    core::Dataset ds;
    ds.y = {0.1, 0.4, -0.2, 0.9, 0.3, -0.5, 0.6, 0.2};
    ds.cols.push_back(core::Column{ColumnSpec{"X1", ColumnKind::categorical, {"0", "1"}},
                                   {},
                                   {0, 1, 0, 1, 0, 1, 0, 1}});
    ds.cols.push_back(core::Column{ColumnSpec{"X2", ColumnKind::continuous, {}},
                                   {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0},
                                   {}});
    ds.cols.push_back(core::Column{ColumnSpec{"X3", ColumnKind::categorical, {"a", "b", "c"}},
                                   {},
                                   {0, 1, 2, 0, 1, 2, 0, 0}});
    ds.cols.push_back(core::Column{ColumnSpec{"X4", ColumnKind::categorical, {"u", "v"}},
                                   {},
                                   {0, 0, 0, 0, 0, 1, 1, 1}});
    return ds;
}

}  // namespace

TEST_CASE("build_groups enumerates level combinations lexicographically") {
    const auto ds = four_col_ds();
    const auto view = core::discretize(ds, 2);
    const std::vector<int> cols{0, 2};

    const auto neutral = ptest::build_groups(ds, view, cols, ptest::AbsentColumnRule::neutral);
    REQUIRE(neutral.size() == 6);
    CHECK(neutral[0].label == "X1=0,X3=a");
    CHECK(neutral[1].label == "X1=0,X3=b");
    CHECK(neutral[5].label == "X1=1,X3=c");
    for (const auto& g : neutral) {
        CHECK(g.x0.present[0]);
        CHECK(g.x0.present[2]);
        CHECK(g.x0.present[1]);         // continuous: median
        CHECK_FALSE(g.x0.present[3]);   // categorical non-tested: omitted
        CHECK(g.x0.cont[1] == Catch::Approx(4.5));
    }
    CHECK(neutral[5].x0.cat[0] == 1);
    CHECK(neutral[5].x0.cat[2] == 2);

    const auto fixed = ptest::build_groups(ds, view, cols, ptest::AbsentColumnRule::fixed);
    for (const auto& g : fixed) {
        CHECK(g.x0.present[3]);
        CHECK(g.x0.cat[3] == 0);  // modal level of X4
    }
}

TEST_CASE("build_groups uses bin representatives for tested continuous columns") {
    const auto ds = four_col_ds();
    const auto view = core::discretize(ds, 2);
    const std::vector<int> cols{0, 1};
    const auto groups = ptest::build_groups(ds, view, cols, ptest::AbsentColumnRule::neutral);
    REQUIRE(groups.size() == 4);
    CHECK(groups[0].label == "X1=0,X2=Low");
    CHECK(groups[1].label == "X1=0,X2=High");
    CHECK(groups[0].x0.cont[1] == Catch::Approx(view.bin_repr[1][0]));
    CHECK(groups[1].x0.cont[1] == Catch::Approx(view.bin_repr[1][1]));
}

TEST_CASE("interaction test runs end to end on a small fit") {
    Rng gen(88);
    core::Dataset ds;
    std::vector<int> x1(40), x2(40);
    for (int i = 0; i < 40; ++i) {
        x1[i] = static_cast<int>(gen.below(2));
        x2[i] = static_cast<int>(gen.below(2));
        ds.y.push_back(0.8 * x1[i] * x2[i] + 0.3 * gen.normal());
    }
    ds.cols.push_back(core::Column{ColumnSpec{"X1", ColumnKind::categorical, {"0", "1"}}, {}, x1});
    ds.cols.push_back(core::Column{ColumnSpec{"X2", ColumnKind::categorical, {"0", "1"}}, {}, x2});

    sampler::PriorConfig prior;
    prior.A = 1.0;
    sampler::McmcConfig mcfg;
    mcfg.n_iter = 600;
    mcfg.burn_in = 300;
    mcfg.thin = 3;
    mcfg.seed = 12;
    const auto draws = sampler::run_mcmc(ds, prior, mcfg);
    REQUIRE(draws.states.size() == 100);

    const auto view = core::discretize(ds, 2);
    const auto cache = ptest::StateCache::build(ds, draws, prior);
    ptest::TestConfig tcfg;
    tcfg.pred_draws = 40;
    tcfg.n_perm = 49;
    tcfg.replications = 2;
    Rng rng(derive_seed(12, "ptest/0,1"));
    const std::vector<int> cols{0, 1};
    const auto rep = ptest::test_interaction(cache, ds, view, cols, tcfg, rng);

    CHECK(rep.columns == cols);
    REQUIRE(rep.group_labels.size() == 4);
    REQUIRE(rep.replicate_p.size() == 2);
    CHECK(rep.average_p ==
          Catch::Approx(0.5 * (rep.replicate_p[0] + rep.replicate_p[1])).margin(1e-12));
    CHECK(rep.depth == 8);  // pooled 160 draws
    REQUIRE(rep.last_samples.size() == 4);
    for (const auto& g : rep.last_samples) CHECK(g.size() == 40);
    for (double p : rep.replicate_p) {
        CHECK(p >= 1.0 / 50.0);
        CHECK(p <= 1.0);
    }

    const std::vector<int> too_few{0};
    CHECK_THROWS_AS(ptest::test_interaction(cache, ds, view, too_few, tcfg, rng),
                    core::ValidationError);
    const std::vector<int> bad{0, 9};
    CHECK_THROWS_AS(ptest::test_interaction(cache, ds, view, bad, tcfg, rng), core::ValidationError);
}

TEST_CASE("density grids share one padded 512-point grid") {
    std::vector<std::vector<double>> groups{{0.0, 1.0, 2.0}, {5.0, 6.0, 7.0}};
    const auto t = ptest::density_grids(groups, 512);
    REQUIRE(t.grid.size() == 512);
    REQUIRE(t.per_group.size() == 2);
    CHECK(t.grid.front() == Catch::Approx(0.0 - 0.7));
    CHECK(t.grid.back() == Catch::Approx(7.0 + 0.7));
    for (const auto& d : t.per_group) {
        REQUIRE(d.size() == 512);
        for (double v : d) CHECK(v >= 0.0);
    }
}
