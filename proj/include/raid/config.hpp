// Serialization layer: JSON run configuration with field-path errors on
// bad input, canonical config echo with a stable hash, JSONL draws files,
// report writers, and the run manifest. Draws bytes depend only on the
// configuration and seed; wall-clock timing goes to the manifest.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "raid/core.hpp"
#include "raid/ppmx.hpp"
#include "raid/ptest.hpp"
#include "raid/rng.hpp"
#include "raid/rules.hpp"
#include "raid/sampler.hpp"
#include "raid/simgen.hpp"

namespace raid::config {

using json = nlohmann::json;

namespace detail {

inline void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw core::ParseError("config: " + path + ": expected an object");
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw core::ParseError("config: " + path + ": unknown key '" + item.key() + "'");
    }
}

inline double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw core::ParseError("config: " + path + ": expected a number");
    return v.get<double>();
}

inline int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw core::ParseError("config: " + path + ": expected an integer");
    return v.get<int>();
}

inline uint64_t as_u64(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
        throw core::ParseError("config: " + path + ": expected a nonnegative integer");
    return v.get<uint64_t>();
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw core::ParseError("config: " + path + ": expected true or false");
    return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw core::ParseError("config: " + path + ": expected a string");
    return v.get<std::string>();
}

inline double get_double(const json& j, const std::string& path, const char* key, double fb) {
    return j.contains(key) ? as_double(j.at(key), path + "." + key) : fb;
}

inline int get_int(const json& j, const std::string& path, const char* key, int fb) {
    return j.contains(key) ? as_int(j.at(key), path + "." + key) : fb;
}

inline uint64_t get_u64(const json& j, const std::string& path, const char* key, uint64_t fb) {
    return j.contains(key) ? as_u64(j.at(key), path + "." + key) : fb;
}

inline bool get_bool(const json& j, const std::string& path, const char* key, bool fb) {
    return j.contains(key) ? as_bool(j.at(key), path + "." + key) : fb;
}

inline std::string get_string(const json& j, const std::string& path, const char* key,
                              const std::string& fb) {
    return j.contains(key) ? as_string(j.at(key), path + "." + key) : fb;
}

inline std::vector<double> as_double_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw core::ParseError("config: " + path + ": expected an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::string fmt(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

}  // namespace detail

// ---- config parsing ----

inline ppmx::SimilarityHyper parse_similarity(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"m0", "k0", "nu0", "kappa0", "dirichlet_shape"});
    ppmx::SimilarityHyper h;
    h.m0 = detail::get_double(j, path, "m0", h.m0);
    h.k0 = detail::get_double(j, path, "k0", h.k0);
    h.nu0 = detail::get_double(j, path, "nu0", h.nu0);
    h.kappa0 = detail::get_double(j, path, "kappa0", h.kappa0);
    h.dirichlet_shape = detail::get_double(j, path, "dirichlet_shape", h.dirichlet_shape);
    h.validate();
    return h;
}

inline ppmx::CohesionSpec parse_cohesion(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"kind", "mass"});
    ppmx::CohesionSpec c;
    const std::string kind = detail::get_string(j, path, "kind", "dp");
    if (kind == "dp")
        c.kind = ppmx::CohesionKind::dp;
    else if (kind == "uniform")
        c.kind = ppmx::CohesionKind::uniform;
    else
        throw core::ParseError("config: " + path + ".kind: expected 'dp' or 'uniform'");
    c.M = detail::get_double(j, path, "mass", c.M);
    return c;
}

inline sampler::PriorConfig parse_prior(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path,
                       {"cohesion", "similarity", "A", "mu0_mean", "mu0_sd", "sigma0_max",
                        "fix_hyperparams", "fixed_mu0", "fixed_sigma0", "gamma"});
    sampler::PriorConfig p;
    if (j.contains("cohesion")) p.cohesion = parse_cohesion(j.at("cohesion"), path + ".cohesion");
    if (j.contains("similarity")) p.similarity = parse_similarity(j.at("similarity"), path + ".similarity");
    p.A = detail::get_double(j, path, "A", p.A);
    p.mu0_mean = detail::get_double(j, path, "mu0_mean", p.mu0_mean);
    p.mu0_sd = detail::get_double(j, path, "mu0_sd", p.mu0_sd);
    p.sigma0_max = detail::get_double(j, path, "sigma0_max", p.sigma0_max);
    p.fix_hyperparams = detail::get_bool(j, path, "fix_hyperparams", p.fix_hyperparams);
    p.fixed_mu0 = detail::get_double(j, path, "fixed_mu0", p.fixed_mu0);
    p.fixed_sigma0 = detail::get_double(j, path, "fixed_sigma0", p.fixed_sigma0);
    if (j.contains("gamma")) p.gamma = detail::as_double_array(j.at("gamma"), path + ".gamma");
    return p;
}

inline sampler::McmcConfig parse_mcmc(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"iterations", "burn_in", "thin", "n_aux", "seed", "prior_only"});
    sampler::McmcConfig m;
    m.n_iter = detail::get_int(j, path, "iterations", m.n_iter);
    m.burn_in = detail::get_int(j, path, "burn_in", m.burn_in);
    m.thin = detail::get_int(j, path, "thin", m.thin);
    m.n_aux = detail::get_int(j, path, "n_aux", m.n_aux);
    m.seed = detail::get_u64(j, path, "seed", m.seed);
    m.prior_only = detail::get_bool(j, path, "prior_only", m.prior_only);
    m.validate();
    return m;
}

inline rules::MiningConfig parse_mining(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"min_support", "min_confidence", "min_cluster_size", "max_order"});
    rules::MiningConfig m;
    m.min_support = detail::get_double(j, path, "min_support", m.min_support);
    m.min_confidence = detail::get_double(j, path, "min_confidence", m.min_confidence);
    m.min_cluster_size = detail::get_int(j, path, "min_cluster_size", m.min_cluster_size);
    m.max_order = detail::get_int(j, path, "max_order", m.max_order);
    m.validate();
    return m;
}

inline ptest::TestConfig parse_test(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"pred_draws", "n_perm", "replications", "absent", "pt_c",
                                 "pt_max_depth", "grade_prob_states"});
    ptest::TestConfig t;
    t.pred_draws = detail::get_int(j, path, "pred_draws", t.pred_draws);
    t.n_perm = detail::get_int(j, path, "n_perm", t.n_perm);
    t.replications = detail::get_int(j, path, "replications", t.replications);
    const std::string ab = detail::get_string(j, path, "absent", "fixed");
    if (ab == "neutral")
        t.absent = ptest::AbsentColumnRule::neutral;
    else if (ab == "fixed")
        t.absent = ptest::AbsentColumnRule::fixed;
    else
        throw core::ParseError("config: " + path + ".absent: expected 'neutral' or 'fixed'");
    t.pt.c = detail::get_double(j, path, "pt_c", t.pt.c);
    t.pt.max_depth = detail::get_int(j, path, "pt_max_depth", t.pt.max_depth);
    t.grade_prob_states = detail::get_int(j, path, "grade_prob_states", t.grade_prob_states);
    if (t.pred_draws < 2) throw core::ParseError("config: " + path + ".pred_draws: must be >= 2");
    if (t.n_perm < 1) throw core::ParseError("config: " + path + ".n_perm: must be >= 1");
    if (t.replications < 1) throw core::ParseError("config: " + path + ".replications: must be >= 1");
    return t;
}

// The analysis object; the same keys are accepted at the top level of a
// config file next to "data" and "sweep".
inline simgen::AnalysisConfig parse_analysis(const json& j, const std::string& path,
                                             bool allow_extra = false) {
    detail::expect_object(j, path);
    if (!allow_extra)
        detail::check_keys(j, path, {"prior", "mcmc", "mining", "test", "bins",
                                     "standardize_response", "candidate_mode", "pr_threshold"});
    simgen::AnalysisConfig a;
    if (j.contains("prior")) a.prior = parse_prior(j.at("prior"), path + ".prior");
    if (j.contains("mcmc")) a.mcmc = parse_mcmc(j.at("mcmc"), path + ".mcmc");
    if (j.contains("mining")) a.mining = parse_mining(j.at("mining"), path + ".mining");
    if (j.contains("test")) a.test = parse_test(j.at("test"), path + ".test");
    a.bins = detail::get_int(j, path, "bins", a.bins);
    if (a.bins < 2) throw core::ParseError("config: " + path + ".bins: must be >= 2");
    a.standardize_response = detail::get_bool(j, path, "standardize_response", a.standardize_response);
    const std::string mode = detail::get_string(j, path, "candidate_mode", "pr_threshold");
    if (mode == "modal_top_pair")
        a.candidate_mode = simgen::CandidateMode::modal_top_pair;
    else if (mode == "pr_threshold")
        a.candidate_mode = simgen::CandidateMode::pr_threshold;
    else
        throw core::ParseError("config: " + path +
                               ".candidate_mode: expected 'modal_top_pair' or 'pr_threshold'");
    a.pr_threshold = detail::get_double(j, path, "pr_threshold", a.pr_threshold);
    return a;
}

inline core::ColumnSpec parse_covariate(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"name", "kind", "levels"});
    core::ColumnSpec cs;
    if (!j.contains("name")) throw core::ParseError("config: " + path + ": missing 'name'");
    cs.name = detail::as_string(j.at("name"), path + ".name");
    const std::string kind = detail::get_string(j, path, "kind", "continuous");
    if (kind == "continuous") {
        cs.kind = core::ColumnKind::continuous;
        if (j.contains("levels"))
            throw core::ParseError("config: " + path + ".levels: not allowed for a continuous column");
    } else if (kind == "categorical") {
        cs.kind = core::ColumnKind::categorical;
        if (!j.contains("levels") || !j.at("levels").is_array() || j.at("levels").size() < 2)
            throw core::ParseError("config: " + path + ".levels: categorical column needs >= 2 levels");
        for (size_t i = 0; i < j.at("levels").size(); ++i)
            cs.levels.push_back(
                detail::as_string(j.at("levels")[i], path + ".levels[" + std::to_string(i) + "]"));
    } else {
        throw core::ParseError("config: " + path + ".kind: expected 'continuous' or 'categorical'");
    }
    return cs;
}

struct DataSpec {
    std::string path;
    core::LoadSpec load;
};

inline DataSpec parse_data(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"path", "delimiter", "response", "covariates"});
    DataSpec d;
    d.path = detail::get_string(j, path, "path", "");
    const std::string delim = detail::get_string(j, path, "delimiter", ",");
    if (delim == "tab" || delim == "\\t")
        d.load.delimiter = '\t';
    else if (delim.size() == 1)
        d.load.delimiter = delim[0];
    else
        throw core::ParseError("config: " + path + ".delimiter: expected one character or 'tab'");
    if (j.contains("response")) {
        const auto& r = j.at("response");
        const std::string rpath = path + ".response";
        detail::expect_object(r, rpath);
        detail::check_keys(r, rpath, {"name", "kind", "grades"});
        d.load.response_name = detail::get_string(r, rpath, "name", "y");
        const std::string kind = detail::get_string(r, rpath, "kind", "continuous");
        if (kind == "continuous") {
            d.load.response_kind = core::ResponseKind::continuous;
        } else if (kind == "ordinal") {
            d.load.response_kind = core::ResponseKind::ordinal;
            d.load.n_grades = detail::get_int(r, rpath, "grades", 0);
            if (d.load.n_grades < 2)
                throw core::ParseError("config: " + rpath + ".grades: ordinal response needs >= 2");
        } else {
            throw core::ParseError("config: " + rpath + ".kind: expected 'continuous' or 'ordinal'");
        }
    }
    if (!j.contains("covariates") || !j.at("covariates").is_array() || j.at("covariates").empty())
        throw core::ParseError("config: " + path + ".covariates: expected a nonempty array");
    for (size_t i = 0; i < j.at("covariates").size(); ++i)
        d.load.covariates.push_back(
            parse_covariate(j.at("covariates")[i], path + ".covariates[" + std::to_string(i) + "]"));
    return d;
}

struct SweepSpec {
    std::vector<double> A = {0.1, 1.0, 10.0};
    std::vector<double> k0 = {0.1, 1.0, 10.0};
    std::vector<ppmx::CohesionKind> cohesions = {ppmx::CohesionKind::dp, ppmx::CohesionKind::uniform};
};

inline SweepSpec parse_sweep(const json& j, const std::string& path) {
    detail::expect_object(j, path);
    detail::check_keys(j, path, {"A", "k0", "cohesion"});
    SweepSpec s;
    if (j.contains("A")) s.A = detail::as_double_array(j.at("A"), path + ".A");
    if (j.contains("k0")) s.k0 = detail::as_double_array(j.at("k0"), path + ".k0");
    if (j.contains("cohesion")) {
        const auto& arr = j.at("cohesion");
        if (!arr.is_array()) throw core::ParseError("config: " + path + ".cohesion: expected an array");
        s.cohesions.clear();
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string kind =
                detail::as_string(arr[i], path + ".cohesion[" + std::to_string(i) + "]");
            if (kind == "dp")
                s.cohesions.push_back(ppmx::CohesionKind::dp);
            else if (kind == "uniform")
                s.cohesions.push_back(ppmx::CohesionKind::uniform);
            else
                throw core::ParseError("config: " + path + ".cohesion[" + std::to_string(i) +
                                       "]: expected 'dp' or 'uniform'");
        }
    }
    if (s.A.empty() || s.k0.empty() || s.cohesions.empty())
        throw core::ParseError("config: " + path + ": empty sweep axis");
    return s;
}

struct FileConfig {
    bool has_data = false;
    DataSpec data;
    simgen::AnalysisConfig analysis;
    SweepSpec sweep;
};

inline FileConfig parse_file(const json& j) {
    detail::expect_object(j, "(top level)");
    detail::check_keys(j, "(top level)",
                       {"data", "sweep", "prior", "mcmc", "mining", "test", "bins",
                        "standardize_response", "candidate_mode", "pr_threshold"});
    FileConfig fc;
    if (j.contains("data")) {
        fc.has_data = true;
        fc.data = parse_data(j.at("data"), "data");
    }
    if (j.contains("sweep")) fc.sweep = parse_sweep(j.at("sweep"), "sweep");
    fc.analysis = parse_analysis(j, "(top level)", true);
    return fc;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw core::ParseError(origin + ": " + e.what());
    }
}

inline FileConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw core::ParseError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_file(parse_json_text(ss.str(), path));
}

// ---- canonical echo and hashing ----

inline json json_of(const ppmx::SimilarityHyper& h) {
    return json{{"m0", h.m0},
                {"k0", h.k0},
                {"nu0", h.nu0},
                {"kappa0", h.kappa0},
                {"dirichlet_shape", h.dirichlet_shape}};
}

inline json json_of(const ppmx::CohesionSpec& c) {
    return json{{"kind", c.kind == ppmx::CohesionKind::dp ? "dp" : "uniform"}, {"mass", c.M}};
}

inline json json_of(const sampler::PriorConfig& p) {
    return json{{"cohesion", json_of(p.cohesion)},
                {"similarity", json_of(p.similarity)},
                {"A", p.A},
                {"mu0_mean", p.mu0_mean},
                {"mu0_sd", p.mu0_sd},
                {"sigma0_max", p.sigma0_max},
                {"fix_hyperparams", p.fix_hyperparams},
                {"fixed_mu0", p.fixed_mu0},
                {"fixed_sigma0", p.fixed_sigma0},
                {"gamma", p.gamma}};
}

inline json json_of(const sampler::McmcConfig& m) {
    return json{{"iterations", m.n_iter}, {"burn_in", m.burn_in},     {"thin", m.thin},
                {"n_aux", m.n_aux},       {"prior_only", m.prior_only}, {"seed", m.seed}};
}

inline json json_of(const rules::MiningConfig& m) {
    return json{{"min_support", m.min_support},
                {"min_confidence", m.min_confidence},
                {"min_cluster_size", m.min_cluster_size},
                {"max_order", m.max_order}};
}

inline json json_of(const ptest::TestConfig& t) {
    return json{{"pred_draws", t.pred_draws},
                {"n_perm", t.n_perm},
                {"replications", t.replications},
                {"absent", t.absent == ptest::AbsentColumnRule::neutral ? "neutral" : "fixed"},
                {"pt_c", t.pt.c},
                {"pt_max_depth", t.pt.max_depth},
                {"grade_prob_states", t.grade_prob_states}};
}

inline json json_of(const simgen::AnalysisConfig& a) {
    return json{{"prior", json_of(a.prior)},
                {"mcmc", json_of(a.mcmc)},
                {"mining", json_of(a.mining)},
                {"test", json_of(a.test)},
                {"bins", a.bins},
                {"standardize_response", a.standardize_response},
                {"candidate_mode",
                 a.candidate_mode == simgen::CandidateMode::modal_top_pair ? "modal_top_pair"
                                                                           : "pr_threshold"},
                {"pr_threshold", a.pr_threshold}};
}

// Stable across runs: FNV-1a of the canonical (key-sorted) dump.
inline uint64_t config_hash(const simgen::AnalysisConfig& a) { return rng::fnv1a64(json_of(a).dump()); }

inline std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- draws files (JSONL) ----

inline void write_draws(std::ostream& out, const sampler::PosteriorDraws& d, const json& config_echo) {
    json header{{"type", "header"}, {"m", d.m},       {"ordinal", d.ordinal},
                {"n_grades", d.n_grades}, {"gamma", d.gamma}, {"seed", d.seed},
                {"config", config_echo}};
    out << header.dump() << "\n";
    for (const auto& st : d.states) {
        std::vector<int> labels1(st.labels.size());
        for (size_t i = 0; i < st.labels.size(); ++i) labels1[i] = st.labels[i] + 1;
        json rec{{"type", "state"}, {"labels", labels1}, {"mu", st.mu},
                 {"sigma", st.sigma}, {"mu0", st.mu0},   {"sigma0", st.sigma0}};
        if (d.ordinal) rec["z"] = st.z;
        out << rec.dump() << "\n";
    }
    json summary{{"type", "summary"},
                 {"n_states", d.states.size()},
                 {"accept_sigma", d.accept_sigma},
                 {"accept_sigma0", d.accept_sigma0},
                 {"mean_clusters", d.mean_clusters()}};
    out << summary.dump() << "\n";
}

struct DrawsFile {
    sampler::PosteriorDraws draws;
    json config_echo;
};

inline DrawsFile read_draws(std::istream& in) {
    DrawsFile out;
    std::string line;
    size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = parse_json_text(line, "draws line " + std::to_string(lineno));
        const std::string type = detail::get_string(rec, "draws", "type", "");
        if (type == "header") {
            if (have_header) throw core::ParseError("draws: duplicate header");
            have_header = true;
            out.draws.m = detail::get_u64(rec, "draws", "m", 0);
            out.draws.ordinal = detail::get_bool(rec, "draws", "ordinal", false);
            out.draws.n_grades = detail::get_int(rec, "draws", "n_grades", 0);
            if (rec.contains("gamma")) out.draws.gamma = detail::as_double_array(rec.at("gamma"), "draws.gamma");
            out.draws.seed = detail::get_u64(rec, "draws", "seed", 0);
            if (rec.contains("config")) out.config_echo = rec.at("config");
        } else if (type == "state") {
            if (!have_header) throw core::ParseError("draws: state record before header");
            sampler::DrawState st;
            for (const auto& v : rec.at("labels")) {
                const int l = detail::as_int(v, "draws.labels");
                if (l < 1) throw core::ParseError("draws line " + std::to_string(lineno) +
                                                  ": labels are 1-based");
                st.labels.push_back(l - 1);
            }
            if (st.labels.size() != out.draws.m)
                throw core::ParseError("draws line " + std::to_string(lineno) + ": labels length " +
                                       std::to_string(st.labels.size()) + ", expected " +
                                       std::to_string(out.draws.m));
            st.mu = detail::as_double_array(rec.at("mu"), "draws.mu");
            st.sigma = detail::as_double_array(rec.at("sigma"), "draws.sigma");
            st.mu0 = detail::get_double(rec, "draws", "mu0", 0.0);
            st.sigma0 = detail::get_double(rec, "draws", "sigma0", 1.0);
            if (rec.contains("z")) st.z = detail::as_double_array(rec.at("z"), "draws.z");
            try {
                ppmx::Partition::from_labels(st.labels);
            } catch (const core::ValidationError& e) {
                throw core::ParseError("draws line " + std::to_string(lineno) + ": " + e.what());
            }
            if (st.mu.size() != st.sigma.size())
                throw core::ParseError("draws line " + std::to_string(lineno) + ": mu/sigma length mismatch");
            out.draws.states.push_back(std::move(st));
        } else if (type == "summary") {
            out.draws.accept_sigma = detail::get_double(rec, "draws", "accept_sigma", 0.0);
            out.draws.accept_sigma0 = detail::get_double(rec, "draws", "accept_sigma0", 0.0);
        } else {
            throw core::ParseError("draws line " + std::to_string(lineno) + ": unknown record type '" +
                                   type + "'");
        }
    }
    if (!have_header) throw core::ParseError("draws: missing header record");
    if (out.draws.states.empty()) throw core::ParseError("draws: no state records");
    return out;
}

inline std::string draws_string(const sampler::PosteriorDraws& d, const json& config_echo) {
    std::ostringstream ss;
    write_draws(ss, d, config_echo);
    return ss.str();
}

// ---- report writers ----

inline std::string pair_label(const core::Dataset& ds, const rules::ColumnPair& p) {
    return ds.cols[p.a].spec.name + ":" + ds.cols[p.b].spec.name;
}

inline std::string pair_table_csv(const core::Dataset& ds, std::span<const rules::PairSummary> s) {
    std::string out = "pair,Pr,Supp,Conf,|S|\n";
    for (const auto& row : s) {
        out += pair_label(ds, row.pair) + "," + detail::fmt(row.pr, 4) + "," +
               detail::fmt(row.mean_support, 4) + "," + detail::fmt(row.mean_confidence, 4) + "," +
               detail::fmt(row.mean_cluster_size, 1) + "\n";
    }
    return out;
}

inline json pair_table_json(const core::Dataset& ds, std::span<const rules::PairSummary> s) {
    json arr = json::array();
    for (const auto& row : s) {
        arr.push_back(json{{"pair", pair_label(ds, row.pair)},
                           {"columns", json::array({ds.cols[row.pair.a].spec.name,
                                                    ds.cols[row.pair.b].spec.name})},
                           {"pr", row.pr},
                           {"mean_support", row.mean_support},
                           {"mean_confidence", row.mean_confidence},
                           {"mean_cluster_size", row.mean_cluster_size},
                           {"firing_iterates", row.firing_iterates}});
    }
    return arr;
}

inline json test_report_json(const core::Dataset& ds, const ptest::TestReport& rep) {
    json cols = json::array();
    for (int c : rep.columns) cols.push_back(ds.cols[c].spec.name);
    return json{{"columns", cols},
                {"group_labels", rep.group_labels},
                {"group_sizes", rep.group_sizes},
                {"replicate_p", rep.replicate_p},
                {"replicate_stat", rep.replicate_stat},
                {"average_p", rep.average_p},
                {"n_perm", rep.n_perm},
                {"depth", rep.depth}};
}

inline std::string density_csv(const ptest::DensityTable& t, std::span<const std::string> labels) {
    std::string out = "x";
    for (const auto& l : labels) out += "," + l;
    out += "\n";
    for (size_t i = 0; i < t.grid.size(); ++i) {
        out += detail::fmt_g(t.grid[i]);
        for (const auto& g : t.per_group) out += "," + detail::fmt_g(g[i]);
        out += "\n";
    }
    return out;
}

inline json toy_study_json(const simgen::ToyStudyConfig& cfg, const simgen::ToyStudyResult& res,
                           const core::Dataset& name_source) {
    json cells = json::array();
    for (const auto& c : res.cells) {
        json cands = json::array();
        for (const auto& pr : c.candidates) cands.push_back(pair_label(name_source, pr));
        json tests = json::object();
        for (const auto& [pair, p] : c.avg_p) tests[pair_label(name_source, pair)] = p;
        cells.push_back(json{{"scenario", simgen::to_string(c.scenario)},
                             {"replicate", c.replicate},
                             {"candidates", cands},
                             {"tests", tests},
                             {"detected", c.raid_detected},
                             {"detected_planted", c.raid_detected_planted},
                             {"lm_detected_planted", c.lm_detected_planted},
                             {"mean_clusters", c.mean_clusters}});
    }
    json rates = json::object();
    for (auto s : cfg.scenarios) {
        rates[simgen::to_string(s)] = json{{"detection", res.detection_rate(s)},
                                           {"lm", res.lm_rate(s)}};
    }
    return json{{"cells", cells}, {"rates", rates}};
}

inline std::string toy_summary_csv(const simgen::ToyStudyConfig& cfg,
                                   const simgen::ToyStudyResult& res) {
    std::string out = "scenario,detection_rate,lm_rate\n";
    for (auto s : cfg.scenarios) {
        out += std::string(simgen::to_string(s)) + "," + detail::fmt(res.detection_rate(s), 4) + "," +
               detail::fmt(res.lm_rate(s), 4) + "\n";
    }
    return out;
}

inline json osteo_study_json(const simgen::OsteoStudyResult& res) {
    json cells = json::array();
    for (const auto& c : res.cells) {
        cells.push_back(json{{"mechanism", simgen::to_string(c.spec.mechanism)},
                             {"kind", simgen::to_string(c.spec.kind)},
                             {"sigma", c.spec.sigma},
                             {"fraction", c.spec.fraction},
                             {"replicate", c.replicate},
                             {"tp", c.tp},
                             {"fp", c.fp},
                             {"fp_relaxed", c.fp_relaxed},
                             {"mean_clusters", c.mean_clusters}});
    }
    return json{{"cells", cells}};
}

inline std::string osteo_summary_csv(const simgen::OsteoStudyResult& res) {
    struct Acc {
        int n = 0, tp = 0, fp = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& c : res.cells) {
        const std::string key = std::string(simgen::to_string(c.spec.mechanism)) + "," +
                                simgen::to_string(c.spec.kind) + "," + detail::fmt_g(c.spec.sigma) +
                                "," + detail::fmt_g(c.spec.fraction);
        auto& a = acc[key];
        ++a.n;
        a.tp += c.tp ? 1 : 0;
        a.fp += c.fp;
    }
    std::string out = "mechanism,kind,sigma,fraction,tp_rate,mean_fp\n";
    for (const auto& [key, a] : acc)
        out += key + "," + detail::fmt(static_cast<double>(a.tp) / a.n, 4) + "," +
               detail::fmt(static_cast<double>(a.fp) / a.n, 4) + "\n";
    return out;
}

// Raw dataset as a delimited table; %.17g keeps doubles exact on reload.
inline std::string dataset_csv(const core::Dataset& ds) {
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string out;
    for (const auto& col : ds.cols) out += col.spec.name + ",";
    out += ds.response_name + "\n";
    for (size_t i = 0; i < ds.m(); ++i) {
        for (const auto& col : ds.cols) {
            out += col.spec.kind == core::ColumnKind::categorical ? col.spec.levels[col.codes[i]]
                                                                  : num(col.values[i]);
            out += ",";
        }
        out += ds.response_kind == core::ResponseKind::ordinal ? std::to_string(ds.y_ord[i])
                                                               : num(ds.y[i]);
        out += "\n";
    }
    return out;
}

// The "data" block matching a dataset, so a generated table can be fed
// straight back into fit.
inline json data_spec_json(const core::Dataset& ds, const std::string& path) {
    json covs = json::array();
    for (const auto& col : ds.cols) {
        json c{{"name", col.spec.name}};
        if (col.spec.kind == core::ColumnKind::categorical) {
            c["kind"] = "categorical";
            c["levels"] = col.spec.levels;
        } else {
            c["kind"] = "continuous";
        }
        covs.push_back(c);
    }
    json resp{{"name", ds.response_name}};
    if (ds.response_kind == core::ResponseKind::ordinal) {
        resp["kind"] = "ordinal";
        resp["grades"] = ds.n_grades;
    } else {
        resp["kind"] = "continuous";
    }
    return json{{"path", path}, {"delimiter", ","}, {"response", resp}, {"covariates", covs}};
}

// ---- manifest and file helpers ----

struct RunManifest {
    std::string command;
    uint64_t seed = 0;
    std::string config_hash;
    std::string data_path;
    std::string data_hash;
    std::vector<std::string> outputs;
    double wall_ms = 0.0;
};

inline json manifest_json(const RunManifest& m) {
    return json{{"command", m.command},   {"seed", m.seed},           {"config_hash", m.config_hash},
                {"data_path", m.data_path}, {"data_hash", m.data_hash}, {"outputs", m.outputs},
                {"wall_ms", m.wall_ms}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw core::ParseError("cannot write " + path);
    out << content;
    if (!out) throw core::ParseError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw core::ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline uint64_t file_hash(const std::string& path) { return rng::fnv1a64(read_text_file(path)); }

}  // namespace raid::config
