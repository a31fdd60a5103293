// Dataset model and deterministic preprocessing: delimited-table loading
// against a declared schema, covariate/response standardization, and
// equal-count discretization of continuous columns for rule mining.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "raid/math.hpp"

namespace raid::core {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ColumnKind { continuous, categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<std::string> levels;  // categorical only

    int level_index(const std::string& lv) const {
        for (size_t i = 0; i < levels.size(); ++i)
            if (levels[i] == lv) return static_cast<int>(i);
        return -1;
    }
};

struct Column {
    ColumnSpec spec;
    std::vector<double> values;  // continuous
    std::vector<int> codes;      // categorical level indices
};

enum class ResponseKind { continuous, ordinal };

struct StandardizeParams {
    std::vector<double> col_mean, col_sd;  // per covariate column (1/0 for categorical slots)
    bool response_standardized = false;
    double y_mean = 0.0, y_sd = 1.0;
};

struct Dataset {
    std::vector<Column> cols;
    ResponseKind response_kind = ResponseKind::continuous;
    std::string response_name = "y";
    int n_grades = 0;                // ordinal only
    std::vector<double> y;           // continuous response
    std::vector<int> y_ord;          // ordinal response, grades 0..n_grades-1
    bool covariates_standardized = false;
    StandardizeParams std_params;

    size_t m() const { return response_kind == ResponseKind::ordinal ? y_ord.size() : y.size(); }
    size_t p() const { return cols.size(); }

    int column_index(const std::string& name) const {
        for (size_t c = 0; c < cols.size(); ++c)
            if (cols[c].spec.name == name) return static_cast<int>(c);
        return -1;
    }

    void validate() const {
        const size_t n = m();
        if (n == 0) throw ValidationError("dataset has no rows");
        for (const auto& col : cols) {
            const size_t len = col.spec.kind == ColumnKind::continuous ? col.values.size() : col.codes.size();
            if (len != n) throw ValidationError("column " + col.spec.name + " length mismatch");
            if (col.spec.kind == ColumnKind::categorical) {
                const int L = static_cast<int>(col.spec.levels.size());
                if (L < 2) throw ValidationError("column " + col.spec.name + " needs >= 2 levels");
                for (int code : col.codes)
                    if (code < 0 || code >= L)
                        throw ValidationError("column " + col.spec.name + " has out-of-range level code");
            } else {
                for (double v : col.values)
                    if (!std::isfinite(v)) throw ValidationError("column " + col.spec.name + " has non-finite value");
            }
        }
        if (response_kind == ResponseKind::ordinal) {
            if (n_grades < 2) throw ValidationError("ordinal response needs >= 2 grades");
            for (int g : y_ord)
                if (g < 0 || g >= n_grades) throw ValidationError("ordinal response outside declared range");
        } else {
            for (double v : y)
                if (!std::isfinite(v)) throw ValidationError("response has non-finite value");
        }
    }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

inline std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& s, size_t row, const std::string& col) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("row " + std::to_string(row) + ", column " + col + ": cannot parse '" + s + "' as number");
    }
}

}  // namespace detail

struct LoadSpec {
    std::vector<ColumnSpec> covariates;
    std::string response_name = "y";
    ResponseKind response_kind = ResponseKind::continuous;
    int n_grades = 0;
    char delimiter = ',';
};

// Reads a delimited table with a header row; unknown columns are ignored,
// missing declared columns are an error naming the column.
inline Dataset load_dataset(std::istream& in, const LoadSpec& spec) {
    std::string header_line;
    if (!std::getline(in, header_line)) throw ParseError("empty input: no header row");
    const auto header = detail::split_line(header_line, spec.delimiter);

    std::map<std::string, size_t> col_pos;
    for (size_t i = 0; i < header.size(); ++i) col_pos[detail::strip(header[i])] = i;

    Dataset ds;
    ds.response_kind = spec.response_kind;
    ds.response_name = spec.response_name;
    ds.n_grades = spec.n_grades;

    std::vector<size_t> cov_pos;
    for (const auto& cs : spec.covariates) {
        auto it = col_pos.find(cs.name);
        if (it == col_pos.end()) throw ParseError("missing column: " + cs.name);
        cov_pos.push_back(it->second);
        ds.cols.push_back(Column{cs, {}, {}});
    }
    auto yit = col_pos.find(spec.response_name);
    if (yit == col_pos.end()) throw ParseError("missing column: " + spec.response_name);
    const size_t y_pos = yit->second;

    std::string line;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::strip(line).empty()) continue;
        const auto fields = detail::split_line(line, spec.delimiter);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        for (size_t c = 0; c < ds.cols.size(); ++c) {
            const std::string raw = detail::strip(fields[cov_pos[c]]);
            auto& col = ds.cols[c];
            if (col.spec.kind == ColumnKind::continuous) {
                col.values.push_back(detail::parse_double(raw, row, col.spec.name));
            } else {
                const int code = col.spec.level_index(raw);
                if (code < 0)
                    throw ParseError("row " + std::to_string(row) + ", column " + col.spec.name +
                                     ": unknown level '" + raw + "'");
                col.codes.push_back(code);
            }
        }
        const std::string yraw = detail::strip(fields[y_pos]);
        if (spec.response_kind == ResponseKind::ordinal) {
            const double v = detail::parse_double(yraw, row, spec.response_name);
            const int g = static_cast<int>(std::llround(v));
            if (std::fabs(v - g) > 1e-9 || g < 0 || g >= spec.n_grades)
                throw ParseError("row " + std::to_string(row) + ": ordinal response '" + yraw +
                                 "' outside grades 0.." + std::to_string(spec.n_grades - 1));
            ds.y_ord.push_back(g);
        } else {
            ds.y.push_back(detail::parse_double(yraw, row, spec.response_name));
        }
    }
    ds.validate();
    return ds;
}

inline Dataset load_dataset_file(const std::string& path, const LoadSpec& spec) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return load_dataset(in, spec);
}

// Centers and scales continuous covariates to mean 0, sd 1 (divisor m-1);
// optionally the continuous response too. Zero-variance columns are an error.
inline void standardize(Dataset& ds, bool standardize_response) {
    if (ds.covariates_standardized) throw ValidationError("dataset already standardized");
    ds.validate();
    StandardizeParams sp;
    sp.col_mean.assign(ds.p(), 0.0);
    sp.col_sd.assign(ds.p(), 1.0);
    for (size_t c = 0; c < ds.p(); ++c) {
        auto& col = ds.cols[c];
        if (col.spec.kind != ColumnKind::continuous) continue;
        const double mu = math::mean(col.values);
        const double sd = math::sample_sd(col.values);
        if (!(sd > 0.0)) throw ValidationError("column " + col.spec.name + " has zero variance");
        for (double& v : col.values) v = (v - mu) / sd;
        sp.col_mean[c] = mu;
        sp.col_sd[c] = sd;
    }
    if (standardize_response) {
        if (ds.response_kind == ResponseKind::ordinal)
            throw ValidationError("ordinal response cannot be standardized");
        const double mu = math::mean(ds.y);
        const double sd = math::sample_sd(ds.y);
        if (!(sd > 0.0)) throw ValidationError("response has zero variance");
        for (double& v : ds.y) v = (v - mu) / sd;
        sp.response_standardized = true;
        sp.y_mean = mu;
        sp.y_sd = sd;
    }
    ds.covariates_standardized = true;
    ds.std_params = sp;
}

inline void unstandardize(Dataset& ds) {
    if (!ds.covariates_standardized) throw ValidationError("dataset is not standardized");
    for (size_t c = 0; c < ds.p(); ++c) {
        auto& col = ds.cols[c];
        if (col.spec.kind != ColumnKind::continuous) continue;
        for (double& v : col.values) v = v * ds.std_params.col_sd[c] + ds.std_params.col_mean[c];
    }
    if (ds.std_params.response_standardized)
        for (double& v : ds.y) v = v * ds.std_params.y_sd + ds.std_params.y_mean;
    ds.covariates_standardized = false;
    ds.std_params = StandardizeParams{};
}

// Items are (column, level) pairs with a global dense code. Continuous
// columns are cut at type-7 quantiles; values equal to a cut go to the
// lower bin. Categorical columns pass through their declared levels.
struct DiscretizedView {
    int bins = 2;
    std::vector<int> levels_per_col;
    std::vector<int> col_offset;                 // item code = col_offset[c] + level
    std::vector<std::string> item_names;         // per item code: "col=label"
    std::vector<std::vector<double>> cuts;       // per column (continuous only)
    std::vector<std::vector<double>> bin_repr;   // per column/level: representative raw value (continuous only)
    std::vector<std::vector<int>> row_level;     // [row][col] -> level index
    size_t n_items = 0;

    int level_of(size_t row, size_t col) const { return row_level[row][col]; }
    int item_code(size_t col, int level) const { return col_offset[col] + level; }
    size_t n_rows() const { return row_level.size(); }
    size_t n_cols() const { return levels_per_col.size(); }
};

inline std::vector<std::string> bin_labels(int bins) {
    if (bins == 2) return {"Low", "High"};
    if (bins == 3) return {"Low", "Medium", "High"};
    std::vector<std::string> out;
    for (int b = 0; b < bins; ++b) out.push_back("Bin" + std::to_string(b + 1));
    return out;
}

inline DiscretizedView discretize(const Dataset& ds, int bins) {
    if (bins < 2) throw ValidationError("discretize needs bins >= 2");
    ds.validate();
    DiscretizedView view;
    view.bins = bins;
    const size_t n = ds.m();
    view.row_level.assign(n, std::vector<int>(ds.p(), 0));
    view.cuts.resize(ds.p());
    view.bin_repr.resize(ds.p());
    const auto labels = bin_labels(bins);

    for (size_t c = 0; c < ds.p(); ++c) {
        const auto& col = ds.cols[c];
        if (col.spec.kind == ColumnKind::categorical) {
            view.levels_per_col.push_back(static_cast<int>(col.spec.levels.size()));
            view.col_offset.push_back(static_cast<int>(view.item_names.size()));
            for (const auto& lv : col.spec.levels) view.item_names.push_back(col.spec.name + "=" + lv);
            for (size_t r = 0; r < n; ++r) view.row_level[r][c] = col.codes[r];
        } else {
            std::vector<double> cuts;
            for (int b = 1; b < bins; ++b)
                cuts.push_back(math::quantile_type7(col.values, static_cast<double>(b) / bins));
            view.cuts[c] = cuts;
            view.levels_per_col.push_back(bins);
            view.col_offset.push_back(static_cast<int>(view.item_names.size()));
            for (int b = 0; b < bins; ++b) view.item_names.push_back(col.spec.name + "=" + labels[b]);
            std::vector<std::vector<double>> members(bins);
            for (size_t r = 0; r < n; ++r) {
                const double v = col.values[r];
                int lvl = bins - 1;
                for (int b = 0; b < bins - 1; ++b) {
                    if (v <= cuts[b]) {
                        lvl = b;
                        break;
                    }
                }
                view.row_level[r][c] = lvl;
                members[lvl].push_back(v);
            }
            view.bin_repr[c].assign(bins, 0.0);
            for (int b = 0; b < bins; ++b)
                view.bin_repr[c][b] = members[b].empty() ? (cuts.empty() ? 0.0 : cuts[std::min<size_t>(b, cuts.size() - 1)])
                                                         : math::median(members[b]);
        }
    }
    view.n_items = view.item_names.size();
    return view;
}

}  // namespace raid::core
