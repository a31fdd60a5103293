// Command line front end: fit, discover, test, density, sweep, simulate.
// Every run writes a manifest next to its outputs; draws files depend only
// on the configuration and seed, so a saved config replays byte for byte.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raid/config.hpp"
#include "raid/parallel.hpp"

namespace fs = std::filesystem;
using namespace raid;
using config::json;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<int> resolve_columns(const core::Dataset& ds, const std::vector<std::string>& names) {
    std::vector<int> out;
    for (const auto& n : names) {
        const int c = ds.column_index(n);
        if (c < 0) throw core::ValidationError("unknown column '" + n + "'");
        out.push_back(c);
    }
    return out;
}

core::Dataset load_data(const config::DataSpec& spec) {
    if (spec.path.empty()) throw core::ValidationError("config has no data.path and no --data was given");
    std::ifstream in(spec.path);
    if (!in) throw core::ParseError("cannot open data file " + spec.path);
    return core::load_dataset(in, spec.load);
}

core::Dataset prepare(const core::Dataset& raw, const simgen::AnalysisConfig& a) {
    core::Dataset prepared = raw;
    const bool std_resp =
        a.standardize_response && raw.response_kind == core::ResponseKind::continuous;
    core::standardize(prepared, std_resp);
    return prepared;
}

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

void write_manifest(const std::string& dir, config::RunManifest m, const Timer& timer) {
    m.wall_ms = timer.ms();
    config::write_text_file(out_path(dir, "manifest.json"), config::manifest_json(m).dump(2) + "\n");
}

config::RunManifest base_manifest(const std::string& command, const config::FileConfig& fc,
                                  uint64_t seed) {
    config::RunManifest m;
    m.command = command;
    m.seed = seed;
    m.config_hash = config::hash_hex(config::config_hash(fc.analysis));
    if (fc.has_data && !fc.data.path.empty()) {
        m.data_path = fc.data.path;
        m.data_hash = config::hash_hex(config::file_hash(fc.data.path));
    }
    return m;
}

// Shared option bundle; each subcommand binds the flags it honors.
struct Options {
    std::string config_path;
    std::string data_path;
    std::string out_dir = "raid_out";
    std::string draws_path;
    std::string cols;
    std::string filter_cols;
    std::string family;
    std::string scenario = "f1";
    std::string mechanism = "mean";
    std::string kind = "continuous";
    double sigma = 1.0;
    double fraction = 1.0;
    int n = 500;
    std::optional<uint64_t> seed;
    std::optional<int> bins;
    std::optional<int> pred_draws;
    std::optional<int> permutations;
    int workers = 1;
};

config::FileConfig read_config(const Options& opt, bool need_data) {
    config::FileConfig fc;
    if (!opt.config_path.empty()) fc = config::load_config_file(opt.config_path);
    if (!opt.data_path.empty()) {
        fc.has_data = true;
        fc.data.path = opt.data_path;
        if (fc.data.load.covariates.empty())
            throw core::ValidationError("--data needs a config that declares data.covariates");
    }
    if (need_data && !fc.has_data) throw core::ValidationError("this command needs a data section");
    if (opt.seed) fc.analysis.mcmc.seed = *opt.seed;
    if (opt.bins) {
        if (*opt.bins < 2) throw core::ValidationError("--bins must be >= 2");
        fc.analysis.bins = *opt.bins;
    }
    if (opt.pred_draws) fc.analysis.test.pred_draws = *opt.pred_draws;
    if (opt.permutations) fc.analysis.test.n_perm = *opt.permutations;
    return fc;
}

json fit_report_json(const simgen::AnalysisConfig& a, const sampler::PosteriorDraws& draws,
                     double lpml) {
    return json{{"lpml", lpml},
                {"mean_clusters", draws.mean_clusters()},
                {"accept_sigma", draws.accept_sigma},
                {"accept_sigma0", draws.accept_sigma0},
                {"n_states", draws.states.size()},
                {"rows", draws.m},
                {"seed", a.mcmc.seed},
                {"config_hash", config::hash_hex(config::config_hash(a))}};
}

int run_fit(const Options& opt) {
    Timer timer;
    const auto fc = read_config(opt, true);
    const auto raw = load_data(fc.data);
    const auto prepared = prepare(raw, fc.analysis);
    const auto draws = sampler::run_mcmc(prepared, fc.analysis.prior, fc.analysis.mcmc);
    const double lpml = sampler::compute_lpml(prepared, draws).lpml;

    config::write_text_file(out_path(opt.out_dir, "draws.jsonl"),
                            config::draws_string(draws, config::json_of(fc.analysis)));
    config::write_text_file(out_path(opt.out_dir, "fit_report.json"),
                            fit_report_json(fc.analysis, draws, lpml).dump(2) + "\n");
    auto m = base_manifest("fit", fc, fc.analysis.mcmc.seed);
    m.outputs = {"draws.jsonl", "fit_report.json"};
    write_manifest(opt.out_dir, m, timer);
    std::cout << "fit: " << draws.states.size() << " states, mean clusters "
              << draws.mean_clusters() << ", lpml " << lpml << "\n";
    return 0;
}

int run_discover(const Options& opt) {
    Timer timer;
    const auto fc = read_config(opt, true);
    const auto raw = load_data(fc.data);
    const auto res = simgen::run_analysis(raw, fc.analysis);

    std::vector<rules::PairSummary> rows = res.summaries;
    if (!opt.filter_cols.empty()) {
        const auto keep = resolve_columns(res.prepared, split_names(opt.filter_cols));
        auto kept = [&](int c) { return std::find(keep.begin(), keep.end(), c) != keep.end(); };
        std::erase_if(rows, [&](const rules::PairSummary& s) {
            return !kept(s.pair.a) || !kept(s.pair.b);
        });
    }

    json cands = json::array();
    for (const auto& ts : res.top_shares) {
        json c{{"pair", config::pair_label(res.prepared, ts.pair)}, {"share", ts.share}};
        const auto it = res.tests.find(ts.pair);
        if (it != res.tests.end()) c["average_p"] = it->second.average_p;
        cands.push_back(c);
    }
    json report{{"candidates", cands},
                {"pairs", config::pair_table_json(res.prepared, rows)},
                {"lpml", res.lpml},
                {"mean_clusters", res.mean_clusters}};

    const std::string table = config::pair_table_csv(res.prepared, rows);
    config::write_text_file(out_path(opt.out_dir, "pairs.csv"), table);
    config::write_text_file(out_path(opt.out_dir, "discover_report.json"), report.dump(2) + "\n");
    config::write_text_file(out_path(opt.out_dir, "draws.jsonl"),
                            config::draws_string(res.draws, config::json_of(fc.analysis)));
    auto m = base_manifest("discover", fc, fc.analysis.mcmc.seed);
    m.outputs = {"pairs.csv", "discover_report.json", "draws.jsonl"};
    write_manifest(opt.out_dir, m, timer);
    std::cout << table;
    return 0;
}

// Shared by test and density: group construction plus predictive sampling.
struct TestRun {
    config::FileConfig fc;
    core::Dataset prepared;
    std::vector<int> cols;
    ptest::TestReport report;
};

TestRun run_grouped(const Options& opt, bool permute) {
    auto fc = read_config(opt, true);
    const auto raw = load_data(fc.data);

    sampler::PosteriorDraws draws;
    if (!opt.draws_path.empty()) {
        std::ifstream in(opt.draws_path);
        if (!in) throw core::ParseError("cannot open draws file " + opt.draws_path);
        auto file = config::read_draws(in);
        if (!file.config_echo.is_null()) {
            // The stored fit settings win over the config file; command line
            // overrides still apply on top.
            fc.analysis = config::parse_analysis(file.config_echo, "draws config");
            if (opt.seed) fc.analysis.mcmc.seed = *opt.seed;
            if (opt.bins) fc.analysis.bins = *opt.bins;
            if (opt.pred_draws) fc.analysis.test.pred_draws = *opt.pred_draws;
            if (opt.permutations) fc.analysis.test.n_perm = *opt.permutations;
        }
        draws = std::move(file.draws);
    }

    TestRun run;
    run.prepared = prepare(raw, fc.analysis);
    if (opt.draws_path.empty())
        draws = sampler::run_mcmc(run.prepared, fc.analysis.prior, fc.analysis.mcmc);
    if (draws.m != run.prepared.m())
        throw core::ValidationError("draws cover " + std::to_string(draws.m) + " rows, data has " +
                                    std::to_string(run.prepared.m()));

    const auto names = split_names(opt.cols);
    if (names.size() < 2 || names.size() > 3)
        throw core::ValidationError("--cols takes two or three column names");
    run.cols = resolve_columns(run.prepared, names);

    auto test_cfg = fc.analysis.test;
    if (!permute) test_cfg.n_perm = 1;
    const auto view = core::discretize(run.prepared, fc.analysis.bins);
    const auto cache = ptest::StateCache::build(run.prepared, draws, fc.analysis.prior);
    rng::Rng trng(rng::derive_seed(fc.analysis.mcmc.seed, "cli/test/" + opt.cols));
    run.report = ptest::test_interaction(cache, run.prepared, view, run.cols, test_cfg, trng);
    run.fc = std::move(fc);
    return run;
}

int run_test(const Options& opt) {
    Timer timer;
    auto run = run_grouped(opt, true);
    const auto density = ptest::density_grids(run.report.last_samples);
    config::write_text_file(out_path(opt.out_dir, "test_report.json"),
                            config::test_report_json(run.prepared, run.report).dump(2) + "\n");
    config::write_text_file(out_path(opt.out_dir, "density.csv"),
                            config::density_csv(density, run.report.group_labels));
    auto m = base_manifest("test", run.fc, run.fc.analysis.mcmc.seed);
    m.outputs = {"test_report.json", "density.csv"};
    write_manifest(opt.out_dir, m, timer);
    std::cout << "test " << opt.cols << ": average p " << run.report.average_p << " over "
              << run.report.replicate_p.size() << " replicate(s), " << run.report.n_perm
              << " permutations\n";
    return 0;
}

int run_density(const Options& opt) {
    Timer timer;
    auto run = run_grouped(opt, false);
    const auto density = ptest::density_grids(run.report.last_samples);
    json report{{"group_labels", run.report.group_labels},
                {"group_sizes", run.report.group_sizes},
                {"points", density.grid.size()}};
    config::write_text_file(out_path(opt.out_dir, "density.csv"),
                            config::density_csv(density, run.report.group_labels));
    config::write_text_file(out_path(opt.out_dir, "density_report.json"), report.dump(2) + "\n");
    auto m = base_manifest("density", run.fc, run.fc.analysis.mcmc.seed);
    m.outputs = {"density.csv", "density_report.json"};
    write_manifest(opt.out_dir, m, timer);
    std::cout << "density: " << run.report.group_labels.size() << " groups on "
              << density.grid.size() << " grid points\n";
    return 0;
}

int run_simulate(const Options& opt) {
    Timer timer;
    const uint64_t seed = opt.seed.value_or(20260817ULL);
    core::Dataset ds;
    if (opt.family == "toy") {
        simgen::ToyScenario sc;
        if (opt.scenario == "f0")
            sc = simgen::ToyScenario::f0;
        else if (opt.scenario == "f1")
            sc = simgen::ToyScenario::f1;
        else if (opt.scenario == "f2")
            sc = simgen::ToyScenario::f2;
        else if (opt.scenario == "f3")
            sc = simgen::ToyScenario::f3;
        else
            throw core::ValidationError("--scenario must be one of f0, f1, f2, f3");
        ds = simgen::gen_toy(sc, opt.n, seed);
    } else if (opt.family == "osteo") {
        simgen::OsteoSpec spec;
        if (opt.mechanism == "mean")
            spec.mechanism = simgen::OsteoMechanism::mean;
        else if (opt.mechanism == "spread")
            spec.mechanism = simgen::OsteoMechanism::spread;
        else if (opt.mechanism == "shape")
            spec.mechanism = simgen::OsteoMechanism::shape;
        else
            throw core::ValidationError("--mechanism must be mean, spread, or shape");
        if (opt.kind == "continuous")
            spec.kind = simgen::CovariateKind::continuous;
        else if (opt.kind == "categorical")
            spec.kind = simgen::CovariateKind::categorical;
        else
            throw core::ValidationError("--kind must be continuous or categorical");
        spec.sigma = opt.sigma;
        spec.fraction = opt.fraction;
        spec.n = opt.n;
        ds = simgen::gen_osteo(spec, seed);
    } else if (opt.family == "ordinal") {
        simgen::OrdinalPlantSpec spec;
        spec.n = opt.n;
        ds = simgen::gen_ordinal_planted(spec, seed);
    } else {
        throw core::ValidationError("--family must be toy, osteo, or ordinal");
    }

    const std::string data_file = out_path(opt.out_dir, "data.csv");
    config::write_text_file(data_file, config::dataset_csv(ds));
    json cfg{{"data", config::data_spec_json(ds, data_file)}};
    config::write_text_file(out_path(opt.out_dir, "config.json"), cfg.dump(2) + "\n");

    config::RunManifest m;
    m.command = "simulate";
    m.seed = seed;
    m.data_path = data_file;
    m.data_hash = config::hash_hex(config::file_hash(data_file));
    m.outputs = {"data.csv", "config.json"};
    write_manifest(opt.out_dir, m, timer);
    std::cout << "simulate " << opt.family << ": " << ds.m() << " rows, " << ds.p()
              << " covariates\n";
    return 0;
}

int run_sweep(const Options& opt) {
    Timer timer;
    auto fc = read_config(opt, false);
    const uint64_t master = opt.seed.value_or(fc.analysis.mcmc.seed);

    core::Dataset raw;
    std::string data_path;
    if (fc.has_data) {
        raw = load_data(fc.data);
        data_path = fc.data.path;
    } else {
        // Default exercise: a planted ordinal interaction.
        raw = simgen::gen_ordinal_planted({}, rng::derive_seed(master, "sweep/data"));
        data_path = out_path(opt.out_dir, "data.csv");
        config::write_text_file(data_path, config::dataset_csv(raw));
        fc.has_data = true;
        fc.data.path = data_path;
        fc.data.load.covariates.clear();
        for (const auto& col : raw.cols) fc.data.load.covariates.push_back(col.spec);
        fc.data.load.response_name = raw.response_name;
        fc.data.load.response_kind = raw.response_kind;
        fc.data.load.n_grades = raw.n_grades;
        // Reload so every cell sees exactly what a replay will read.
        raw = load_data(fc.data);
    }

    struct Cell {
        std::string label;
        simgen::AnalysisConfig analysis;
    };
    std::vector<Cell> cells;
    for (double A : fc.sweep.A)
        for (double k0 : fc.sweep.k0)
            for (auto kind : fc.sweep.cohesions) {
                Cell c;
                c.analysis = fc.analysis;
                c.analysis.prior.A = A;
                c.analysis.prior.similarity.k0 = k0;
                c.analysis.prior.cohesion.kind = kind;
                c.label = "A" + config::detail::fmt_g(A) + "_k0" + config::detail::fmt_g(k0) + "_" +
                          (kind == ppmx::CohesionKind::dp ? "dp" : "uniform");
                c.analysis.mcmc.seed = rng::derive_seed(master, "sweep/" + c.label);
                cells.push_back(std::move(c));
            }

    std::vector<simgen::AnalysisResult> results(cells.size());
    par::parallel_for(cells.size(), opt.workers,
                      [&](size_t i) { results[i] = simgen::run_analysis(raw, cells[i].analysis); });

    json cell_rows = json::array();
    std::string table = "cell,A,k0,cohesion,seed,top_pair,share,average_p,mean_clusters,lpml\n";
    for (size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        const auto& res = results[i];
        const std::string dir = (fs::path(opt.out_dir) / "cells" / cell.label).string();
        config::write_text_file(out_path(dir, "draws.jsonl"),
                                config::draws_string(res.draws, config::json_of(cell.analysis)));
        json cell_cfg = config::json_of(cell.analysis);
        cell_cfg["data"] = config::data_spec_json(raw, data_path);
        config::write_text_file(out_path(dir, "config.json"), cell_cfg.dump(2) + "\n");
        config::write_text_file(out_path(dir, "pairs.csv"),
                                config::pair_table_csv(res.prepared, res.summaries));

        std::string top = "";
        double share = 0.0, avg_p = 1.0;
        if (!res.top_shares.empty()) {
            top = config::pair_label(res.prepared, res.top_shares[0].pair);
            share = res.top_shares[0].share;
            const auto it = res.tests.find(res.top_shares[0].pair);
            if (it != res.tests.end()) avg_p = it->second.average_p;
        }
        cell_rows.push_back(json{{"cell", cell.label},
                                 {"A", cell.analysis.prior.A},
                                 {"k0", cell.analysis.prior.similarity.k0},
                                 {"cohesion", cell.analysis.prior.cohesion.kind == ppmx::CohesionKind::dp
                                                  ? "dp"
                                                  : "uniform"},
                                 {"seed", cell.analysis.mcmc.seed},
                                 {"top_pair", top},
                                 {"share", share},
                                 {"average_p", avg_p},
                                 {"mean_clusters", res.mean_clusters},
                                 {"lpml", res.lpml}});
        table += cell.label + "," + config::detail::fmt_g(cell.analysis.prior.A) + "," +
                 config::detail::fmt_g(cell.analysis.prior.similarity.k0) + "," +
                 (cell.analysis.prior.cohesion.kind == ppmx::CohesionKind::dp ? "dp" : "uniform") +
                 "," + std::to_string(cell.analysis.mcmc.seed) + "," + top + "," +
                 config::detail::fmt(share, 4) + "," + config::detail::fmt(avg_p, 4) + "," +
                 config::detail::fmt(res.mean_clusters, 3) + "," +
                 config::detail::fmt(res.lpml, 4) + "\n";
    }

    config::write_text_file(out_path(opt.out_dir, "sweep.json"),
                            json{{"cells", cell_rows}}.dump(2) + "\n");
    config::write_text_file(out_path(opt.out_dir, "sweep.csv"), table);
    auto m = base_manifest("sweep", fc, master);
    m.outputs = {"sweep.json", "sweep.csv"};
    write_manifest(opt.out_dir, m, timer);
    std::cout << table;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covariate dependent partition models for interaction discovery"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool with_data) {
        sub->add_option("--config", opt.config_path, "JSON configuration file");
        if (with_data) sub->add_option("--data", opt.data_path, "data table (overrides config path)");
        sub->add_option("--seed", opt.seed, "seed override");
        sub->add_option("--out-dir", opt.out_dir, "output directory");
    };

    auto* fit = app.add_subcommand("fit", "run the partition sampler and save draws");
    add_common(fit, true);

    auto* discover = app.add_subcommand("discover", "fit, mine cluster rules, test candidate pairs");
    add_common(discover, true);
    discover->add_option("--bins", opt.bins, "bins for continuous covariates");
    discover->add_option("--filter-cols", opt.filter_cols, "restrict the pair table to these columns");
    discover->add_option("--pred-draws", opt.pred_draws, "predictive draws per group");
    discover->add_option("--permutations", opt.permutations, "permutations per test");

    auto* test = app.add_subcommand("test", "permutation test for one column pair or triple");
    add_common(test, true);
    test->add_option("--cols", opt.cols, "two or three column names, comma separated")->required();
    test->add_option("--draws", opt.draws_path, "reuse a saved draws file");
    test->add_option("--bins", opt.bins, "bins for continuous covariates");
    test->add_option("--pred-draws", opt.pred_draws, "predictive draws per group");
    test->add_option("--permutations", opt.permutations, "permutations per test");

    auto* density = app.add_subcommand("density", "posterior predictive densities by group");
    add_common(density, true);
    density->add_option("--cols", opt.cols, "two or three column names, comma separated")->required();
    density->add_option("--draws", opt.draws_path, "reuse a saved draws file");
    density->add_option("--bins", opt.bins, "bins for continuous covariates");
    density->add_option("--pred-draws", opt.pred_draws, "predictive draws per group");

    auto* sweep = app.add_subcommand("sweep", "prior sensitivity grid over A, k0, cohesion");
    add_common(sweep, true);
    sweep->add_option("--workers", opt.workers, "parallel cells");
    sweep->add_option("--bins", opt.bins, "bins for continuous covariates");
    sweep->add_option("--pred-draws", opt.pred_draws, "predictive draws per group");
    sweep->add_option("--permutations", opt.permutations, "permutations per test");

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic data table");
    simulate->add_option("--family", opt.family, "toy, osteo, or ordinal")->required();
    simulate->add_option("--scenario", opt.scenario, "toy scenario: f0, f1, f2, f3");
    simulate->add_option("--mechanism", opt.mechanism, "osteo mechanism: mean, spread, shape");
    simulate->add_option("--kind", opt.kind, "osteo pair kind: continuous or categorical");
    simulate->add_option("--sigma", opt.sigma, "osteo noise scale");
    simulate->add_option("--fraction", opt.fraction, "osteo signal fraction");
    simulate->add_option("--n", opt.n, "rows to generate");
    simulate->add_option("--seed", opt.seed, "generator seed");
    simulate->add_option("--out-dir", opt.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit->parsed()) return run_fit(opt);
        if (discover->parsed()) return run_discover(opt);
        if (test->parsed()) return run_test(opt);
        if (density->parsed()) return run_density(opt);
        if (sweep->parsed()) return run_sweep(opt);
        if (simulate->parsed()) return run_simulate(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
