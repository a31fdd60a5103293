#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "raid/core.hpp"
#include "raid/rng.hpp"
#include "raid/rules.hpp"

using namespace raid;
using core::ColumnKind;
using core::ColumnSpec;
using rules::AssociationRule;
using rules::ColumnPair;
using rules::MiningConfig;

namespace {

core::Dataset cat_ds(const std::vector<std::vector<int>>& codes_by_col,
                     const std::vector<int>& levels) {
    core::Dataset ds;
    ds.y.assign(codes_by_col[0].size(), 0.0);
    const std::vector<std::string> names{"a", "b", "c", "d", "e"};
    for (size_t c = 0; c < codes_by_col.size(); ++c) {
        std::vector<std::string> lv;
        for (int l = 0; l < levels[c]; ++l) lv.push_back(std::string(1, 'a' + l));
        ds.cols.push_back(core::Column{ColumnSpec{"C" + std::to_string(c), ColumnKind::categorical, lv},
                                       {},
                                       codes_by_col[c]});
    }
    return ds;
}

std::vector<size_t> all_rows(size_t n) {
    std::vector<size_t> r(n);
    std::iota(r.begin(), r.end(), size_t{0});
    return r;
}

}  // namespace

TEST_CASE("mine_block reproduces a hand-counted fixture") {
    // col0 levels a0,a1; col1 levels b0,b1; 8 rows
    const std::vector<std::vector<int>> codes{{0, 0, 0, 0, 1, 1, 0, 0}, {0, 0, 0, 0, 1, 1, 1, 1}};
    const auto ds = cat_ds(codes, {2, 2});
    const auto view = core::discretize(ds, 2);
    MiningConfig cfg;  // support 0.25, confidence 0.5

    const auto res = rules::mine_block(view, all_rows(8), cfg);
    REQUIRE(res.cluster_size == 8);
    REQUIRE(res.rules.size() == 5);
    const auto expect = std::vector<AssociationRule>{
        {0, 2, 0.5, 4.0 / 6.0, 8}, {1, 3, 0.25, 1.0, 8}, {2, 0, 0.5, 1.0, 8},
        {3, 0, 0.25, 0.5, 8},      {3, 1, 0.25, 0.5, 8},
    };
    for (size_t i = 0; i < expect.size(); ++i) {
        CHECK(res.rules[i].antecedent == expect[i].antecedent);
        CHECK(res.rules[i].consequent == expect[i].consequent);
        CHECK(res.rules[i].support == Catch::Approx(expect[i].support).margin(1e-12));
        CHECK(res.rules[i].confidence == Catch::Approx(expect[i].confidence).margin(1e-12));
        CHECK(res.rules[i].cluster_size == 8);
    }
    CHECK(res.triples.empty());
}

TEST_CASE("mine_block agrees with the brute-force miner on random tables") {
    Rng rng(404);
    for (int trial = 0; trial < 30; ++trial) {
        const int C = 3 + static_cast<int>(rng.below(3));
        const int n = 20 + static_cast<int>(rng.below(41));
        std::vector<int> levels(C);
        std::vector<std::vector<int>> codes(C, std::vector<int>(n));
        for (int c = 0; c < C; ++c) {
            levels[c] = 2 + static_cast<int>(rng.below(2));
            for (int r = 0; r < n; ++r) codes[c][r] = static_cast<int>(rng.below(levels[c]));
        }
        const auto ds = cat_ds(codes, levels);
        const auto view = core::discretize(ds, 2);

        MiningConfig cfg;
        cfg.min_support = std::vector<double>{0.1, 0.2, 0.3}[rng.below(3)];
        cfg.min_confidence = std::vector<double>{0.3, 0.5, 0.7}[rng.below(3)];

        const auto res = rules::mine_block(view, all_rows(n), cfg);

        std::vector<std::vector<int>> row_items(n, std::vector<int>(C));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < C; ++c) row_items[r][c] = view.level_of(r, c);
        const auto brute = oracle::brute_force_pair_rules(row_items, view.col_offset, view.levels_per_col,
                                                          cfg.min_support, cfg.min_confidence);

        INFO("trial " << trial << " C=" << C << " n=" << n << " ms=" << cfg.min_support
                      << " mc=" << cfg.min_confidence);
        REQUIRE(res.rules.size() == brute.size());
        for (size_t i = 0; i < brute.size(); ++i) {
            CHECK(res.rules[i].antecedent == brute[i].antecedent);
            CHECK(res.rules[i].consequent == brute[i].consequent);
            CHECK(res.rules[i].support == Catch::Approx(brute[i].support).margin(1e-12));
            CHECK(res.rules[i].confidence == Catch::Approx(brute[i].confidence).margin(1e-12));
            CHECK(res.rules[i].confidence >= res.rules[i].support - 1e-12);
        }
    }
}

TEST_CASE("row order does not change mining output") {
    Rng rng(55);
    const std::vector<std::vector<int>> codes{{0, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 0},
                                              {0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 0},
                                              {1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1, 1}};
    const auto ds = cat_ds(codes, {2, 2, 2});
    const auto view = core::discretize(ds, 2);
    MiningConfig cfg;
    auto rows = all_rows(12);
    const auto base = rules::mine_block(view, rows, cfg);
    rng.shuffle(rows);
    const auto shuffled = rules::mine_block(view, rows, cfg);
    REQUIRE(base.rules.size() == shuffled.rules.size());
    for (size_t i = 0; i < base.rules.size(); ++i) {
        CHECK(base.rules[i].antecedent == shuffled.rules[i].antecedent);
        CHECK(base.rules[i].support == Catch::Approx(shuffled.rules[i].support));
    }
}

TEST_CASE("order-3 itemsets are retained but never become rules") {
    std::vector<std::vector<int>> codes{{0, 0, 0, 0, 0, 0, 1, 1}, {0, 0, 0, 0, 0, 0, 1, 0},
                                        {0, 0, 0, 0, 0, 0, 0, 1}};
    const auto ds = cat_ds(codes, {2, 2, 2});
    const auto view = core::discretize(ds, 2);

    MiningConfig pairs_only;
    const auto res2 = rules::mine_block(view, all_rows(8), pairs_only);
    CHECK(res2.triples.empty());

    MiningConfig with3 = pairs_only;
    with3.max_order = 3;
    const auto res3 = rules::mine_block(view, all_rows(8), with3);
    REQUIRE_FALSE(res3.triples.empty());
    bool found = false;
    for (const auto& t : res3.triples) {
        // every triple spans three distinct columns and has exact support
        int c0 = t.items[0] / 2, c1 = t.items[1] / 2, c2 = t.items[2] / 2;
        CHECK(c0 != c1);
        CHECK(c1 != c2);
        if (t.items == std::array<int, 3>{0, 2, 4}) {
            found = true;
            CHECK(t.support == Catch::Approx(6.0 / 8.0).margin(1e-12));
        }
    }
    CHECK(found);
    // rules are identical with and without order-3 mining
    REQUIRE(res2.rules.size() == res3.rules.size());
    for (size_t i = 0; i < res2.rules.size(); ++i)
        CHECK(res2.rules[i].antecedent == res3.rules[i].antecedent);
}

TEST_CASE("mine_iterate skips clusters below the size floor") {
    std::vector<std::vector<int>> codes{std::vector<int>(17, 0), std::vector<int>(17, 0)};
    for (int i = 12; i < 17; ++i) codes[0][i] = 1;
    const auto ds = cat_ds(codes, {2, 2});
    const auto view = core::discretize(ds, 2);
    std::vector<int> labels(17, 0);
    for (int i = 12; i < 17; ++i) labels[i] = 1;  // sizes 12 and 5
    MiningConfig cfg;                             // floor 10
    const auto it = rules::mine_iterate(view, labels, cfg);
    REQUIRE(it.blocks.size() == 1);
    CHECK(it.blocks[0].cluster_size == 12);
}

TEST_CASE("aggregate symmetrizes directions and averages within iterates first") {
    std::vector<std::vector<int>> codes{{0, 1}, {0, 1}, {0, 1}};
    const auto ds = cat_ds(codes, {2, 2, 2});
    const auto view = core::discretize(ds, 2);  // items 0,1 | 2,3 | 4,5

    rules::IterateRules it1;
    rules::BlockResult blk;
    blk.rules = {
        {0, 2, 0.5, 0.6, 20},  // columns (0,1)
        {2, 0, 0.5, 1.0, 20},  // same pair, other direction
        {4, 1, 0.3, 0.7, 20},  // columns (0,2)
    };
    blk.cluster_size = 20;
    it1.blocks = {blk};
    rules::IterateRules it2;  // fires nothing

    std::vector<rules::IterateRules> iterates{it1, it2};
    const auto summaries = rules::aggregate(view, iterates);
    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].pair == ColumnPair{0, 1});
    CHECK(summaries[0].pr == Catch::Approx(0.5));
    CHECK(summaries[0].mean_support == Catch::Approx(0.5));
    CHECK(summaries[0].mean_confidence == Catch::Approx(0.8));
    CHECK(summaries[0].firing_iterates == 1);
    CHECK(summaries[1].pair == ColumnPair{0, 2});
    CHECK(summaries[1].pr == Catch::Approx(0.5));
    CHECK(summaries[1].mean_support == Catch::Approx(0.3));

    std::vector<rules::IterateRules> reversed{it2, it1};
    const auto again = rules::aggregate(view, reversed);
    REQUIRE(again.size() == summaries.size());
    for (size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].pair == summaries[i].pair);
        CHECK(again[i].pr == Catch::Approx(summaries[i].pr));
        CHECK(again[i].mean_support == Catch::Approx(summaries[i].mean_support));
    }

    const auto cands = rules::candidates_by_threshold(summaries, 0.5);
    CHECK(cands.size() == 2);
    CHECK(rules::candidates_by_threshold(summaries, 0.51).empty());
}

TEST_CASE("top pair per iterate and modal winners across iterates") {
    std::vector<std::vector<int>> codes{{0, 1}, {0, 1}, {0, 1}};
    const auto view = core::discretize(cat_ds(codes, {2, 2, 2}), 2);

    rules::IterateRules it1;  // pair (0,1) dominates: 0.5+0.6+0.5+1.0 = 2.6 vs 1.0
    {
        rules::BlockResult blk;
        blk.rules = {{0, 2, 0.5, 0.6, 20}, {2, 0, 0.5, 1.0, 20}, {4, 1, 0.3, 0.7, 20}};
        it1.blocks = {blk};
    }
    rules::IterateRules it3;  // only pair (0,2)
    {
        rules::BlockResult blk;
        blk.rules = {{1, 5, 0.4, 0.9, 15}};
        it3.blocks = {blk};
    }

    const auto top1 = rules::top_pairs_of_iterate(view, it1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0] == ColumnPair{0, 1});

    std::vector<rules::IterateRules> run{it1, it3, it3};
    const auto modal = rules::modal_top_pairs(view, run);
    REQUIRE(modal.size() == 1);
    CHECK(modal[0].pair == ColumnPair{0, 2});
    CHECK(modal[0].share == Catch::Approx(2.0 / 3.0));

    std::vector<rules::IterateRules> tied{it1, it3};
    const auto both = rules::modal_top_pairs(view, tied);
    REQUIRE(both.size() == 2);

    std::vector<rules::IterateRules> none{rules::IterateRules{}};
    CHECK(rules::modal_top_pairs(view, none).empty());
}

TEST_CASE("mining config validation") {
    MiningConfig cfg;
    cfg.min_support = 0.0;
    CHECK_THROWS_AS(cfg.validate(), core::ValidationError);
    cfg = MiningConfig{};
    cfg.max_order = 4;
    CHECK_THROWS_AS(cfg.validate(), core::ValidationError);
    cfg = MiningConfig{};
    cfg.min_cluster_size = 0;
    CHECK_THROWS_AS(cfg.validate(), core::ValidationError);
}
