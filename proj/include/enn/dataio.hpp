#pragma once

#include "enn/error.hpp"
#include "enn/model.hpp"
#include "enn/seed.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace enn {

enum class ColumnKind { snp, covariate };

struct ColumnMeta {
    std::string name;
    ColumnKind kind = ColumnKind::covariate;
    /// Distinct values seen before imputation (SNP columns only).
    std::vector<double> observed_values;
};

struct Dataset {
    DataMatrix X;
    std::map<std::string, Vector> phenotypes;
    std::vector<ColumnMeta> columns;
    std::vector<std::string> warnings;
    std::size_t dropped_rows = 0;

    [[nodiscard]] Eigen::Index n() const noexcept { return X.rows(); }
    [[nodiscard]] Eigen::Index p() const noexcept { return X.cols(); }

    [[nodiscard]] bool has_phenotype(const std::string& name) const
    {
        return phenotypes.count(name) != 0;
    }

    [[nodiscard]] const Vector& phenotype(const std::string& name) const
    {
        auto it = phenotypes.find(name);
        if (it == phenotypes.end()) {
            throw Error(ErrorCategory::data, "dataset has no phenotype column '" + name + "'");
        }
        return it->second;
    }
};

using IndexList = std::vector<Eigen::Index>;

[[nodiscard]] inline DataMatrix select_rows(const DataMatrix& X, const IndexList& rows)
{
    DataMatrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
    }
    return out;
}

[[nodiscard]] inline Vector select_rows(const Vector& y, const IndexList& rows)
{
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = y[rows[k]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Schema and CSV ingestion

inline constexpr std::string_view missing_sentinel = "NA";

struct Schema {
    std::vector<std::string> phenotypes;
    std::vector<std::string> covariates;
    /// Empty optional means every remaining column is a SNP.
    std::optional<std::vector<std::string>> snps;

    [[nodiscard]] static Schema from_json(const nlohmann::json& j)
    {
        try {
            Schema s;
            s.phenotypes = j.at("phenotypes").get<std::vector<std::string>>();
            if (j.contains("covariates")) {
                s.covariates = j.at("covariates").get<std::vector<std::string>>();
            }
            if (j.contains("snps")) {
                const auto& snps = j.at("snps");
                if (snps.is_string()) {
                    if (snps.get<std::string>() != "auto-remaining") {
                        throw Error(ErrorCategory::config,
                                    "schema 'snps' must be \"auto-remaining\" or a list of names");
                    }
                } else {
                    s.snps = snps.get<std::vector<std::string>>();
                }
            }
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCategory::config, std::string("malformed schema: ") + e.what());
        }
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["phenotypes"] = phenotypes;
        j["covariates"] = covariates;
        if (snps) {
            j["snps"] = *snps;
        } else {
            j["snps"] = "auto-remaining";
        }
        return j;
    }

    [[nodiscard]] static Schema load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorCategory::io, "cannot read schema file " + path);
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCategory::config, "schema " + path + " is not valid JSON: " + e.what());
        }
        return from_json(j);
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Comma-separated fields with optional double quotes ("" escapes a quote).
inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

inline std::optional<double> parse_number(std::string_view s)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

} // namespace detail

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] inline std::string format_shortest(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

/// Reads a header-first CSV. SNP cells must be 0, 1, 2 or NA; missing SNPs
/// are imputed with the column mode (ties go to the smaller genotype), missing
/// covariates with the column mean, and rows with a missing phenotype are
/// dropped. Constant feature columns are removed with a warning.
[[nodiscard]] inline Dataset load_csv(const std::string& path, const Schema& schema)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot read data file " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCategory::data, path + ": missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const std::vector<std::string> header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!position.emplace(header[c], c).second) {
            throw Error(ErrorCategory::data, path + ": duplicate column name '" + header[c] + "'");
        }
    }
    auto column_of = [&](const std::string& name) {
        auto it = position.find(name);
        if (it == position.end()) {
            throw Error(ErrorCategory::data, path + ": schema column '" + name + "' not in header");
        }
        return it->second;
    };

    std::vector<std::size_t> pheno_cols;
    for (const auto& name : schema.phenotypes) pheno_cols.push_back(column_of(name));
    std::set<std::string> covariate_names(schema.covariates.begin(), schema.covariates.end());
    for (const auto& name : schema.covariates) (void)column_of(name);
    std::set<std::string> snp_names;
    if (schema.snps) {
        for (const auto& name : *schema.snps) {
            (void)column_of(name);
            snp_names.insert(name);
        }
    } else {
        std::set<std::string> taken(schema.phenotypes.begin(), schema.phenotypes.end());
        taken.insert(schema.covariates.begin(), schema.covariates.end());
        for (const auto& name : header) {
            if (taken.count(name) == 0) snp_names.insert(name);
        }
    }

    // Feature columns in header order.
    std::vector<std::size_t> feature_cols;
    std::vector<ColumnMeta> meta;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (snp_names.count(header[c]) != 0) {
            feature_cols.push_back(c);
            meta.push_back({header[c], ColumnKind::snp, {}});
        } else if (covariate_names.count(header[c]) != 0) {
            feature_cols.push_back(c);
            meta.push_back({header[c], ColumnKind::covariate, {}});
        }
    }

    const std::size_t nf = feature_cols.size();
    std::vector<std::vector<std::optional<double>>> cells(nf);
    std::vector<std::vector<double>> pheno(pheno_cols.size());
    std::size_t dropped = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCategory::data, path + ": row " + std::to_string(line_no) + " has " +
                                                 std::to_string(fields.size()) + " fields, expected " +
                                                 std::to_string(header.size()));
        }
        auto number = [&](std::size_t c) -> std::optional<double> {
            if (fields[c] == missing_sentinel) return std::nullopt;
            auto v = detail::parse_number(fields[c]);
            if (!v) {
                throw Error(ErrorCategory::data, path + ": malformed number '" + fields[c] +
                                                     "' at row " + std::to_string(line_no) +
                                                     ", column '" + header[c] + "'");
            }
            return v;
        };

        std::vector<double> y_row;
        bool missing_pheno = false;
        for (std::size_t c : pheno_cols) {
            auto v = number(c);
            if (!v) {
                missing_pheno = true;
                break;
            }
            y_row.push_back(*v);
        }
        std::vector<std::optional<double>> x_row(nf);
        for (std::size_t k = 0; k < nf; ++k) {
            x_row[k] = number(feature_cols[k]);
            if (meta[k].kind == ColumnKind::snp && x_row[k]) {
                const double g = *x_row[k];
                if (g != 0.0 && g != 1.0 && g != 2.0) {
                    throw Error(ErrorCategory::data, path + ": SNP value '" + fields[feature_cols[k]] +
                                                         "' outside {0,1,2} in column '" +
                                                         meta[k].name + "' at row " +
                                                         std::to_string(line_no));
                }
            }
        }
        if (missing_pheno) {
            ++dropped;
            continue;
        }
        for (std::size_t k = 0; k < pheno_cols.size(); ++k) pheno[k].push_back(y_row[k]);
        for (std::size_t k = 0; k < nf; ++k) cells[k].push_back(x_row[k]);
    }

    Dataset ds;
    ds.dropped_rows = dropped;
    if (dropped > 0) {
        ds.warnings.push_back("dropped " + std::to_string(dropped) + " row(s) with missing phenotype");
    }
    const std::size_t n = pheno.empty() ? (cells.empty() ? 0 : cells[0].size()) : pheno[0].size();

    std::vector<std::vector<double>> kept_cols;
    for (std::size_t k = 0; k < nf; ++k) {
        auto& col = cells[k];
        std::vector<double> values(n);
        std::size_t missing = 0;
        if (meta[k].kind == ColumnKind::snp) {
            std::array<std::size_t, 3> counts{};
            for (const auto& v : col) {
                if (v) ++counts[static_cast<std::size_t>(*v)];
            }
            for (std::size_t g = 0; g < 3; ++g) {
                if (counts[g] > 0) meta[k].observed_values.push_back(static_cast<double>(g));
            }
            // max_element returns the first maximum: ties resolve toward 0.
            const auto mode = static_cast<double>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            for (std::size_t i = 0; i < n; ++i) {
                values[i] = col[i] ? *col[i] : (++missing, mode);
            }
        } else {
            double sum = 0.0;
            std::size_t seen = 0;
            for (const auto& v : col) {
                if (v) {
                    sum += *v;
                    ++seen;
                }
            }
            const double mean = seen > 0 ? sum / static_cast<double>(seen) : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                values[i] = col[i] ? *col[i] : (++missing, mean);
            }
        }
        if (missing > 0) {
            ds.warnings.push_back("imputed " + std::to_string(missing) + " missing value(s) in column '" +
                                  meta[k].name + "'");
        }
        const bool constant =
            n == 0 || std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
        if (constant) {
            ds.warnings.push_back("dropped constant column '" + meta[k].name + "'");
            continue;
        }
        kept_cols.push_back(std::move(values));
        ds.columns.push_back(std::move(meta[k]));
    }

    ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept_cols.size()));
    for (std::size_t c = 0; c < kept_cols.size(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = kept_cols[c][i];
        }
    }
    for (std::size_t k = 0; k < pheno_cols.size(); ++k) {
        ds.phenotypes[schema.phenotypes[k]] =
            Eigen::Map<const Vector>(pheno[k].data(), static_cast<Eigen::Index>(n));
    }
    return ds;
}

/// Writes the dataset back as CSV (feature columns first, then phenotypes)
/// with shortest round-trip number formatting.
inline void write_csv(const Dataset& ds, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write data file " + path);
    }
    bool first = true;
    for (const auto& c : ds.columns) {
        out << (first ? "" : ",") << c.name;
        first = false;
    }
    for (const auto& [name, y] : ds.phenotypes) {
        out << (first ? "" : ",") << name;
        first = false;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        first = true;
        for (Eigen::Index c = 0; c < ds.p(); ++c) {
            out << (first ? "" : ",") << format_shortest(ds.X(i, c));
            first = false;
        }
        for (const auto& [name, y] : ds.phenotypes) {
            out << (first ? "" : ",") << format_shortest(y[i]);
            first = false;
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Train / validation / test splits

struct SplitSpec {
    int replicate_count = 50;
    std::uint64_t master_seed = 0;
};

struct Split {
    IndexList train;
    IndexList valid;
    IndexList test;
};

struct SplitSizes {
    Eigen::Index train = 0;
    Eigen::Index valid = 0;
    Eigen::Index test = 0;
};

/// 3:1:1 partition sizes. Validation and test each get round(n/5); training
/// takes the rest, so every part is within 1 of its exact share.
[[nodiscard]] inline SplitSizes split_sizes(Eigen::Index n)
{
    if (n < 5) {
        throw Error(ErrorCategory::data,
                    "a 3:1:1 split needs at least 5 samples, got " + std::to_string(n));
    }
    const Eigen::Index fifth = (n + 2) / 5;
    return {n - 2 * fifth, fifth, fifth};
}

/// Deterministic in (master_seed, replicate_index). Indices within each part
/// are sorted ascending.
[[nodiscard]] inline Split split(Eigen::Index n, const SplitSpec& spec, int replicate_index)
{
    if (replicate_index < 0 || replicate_index >= spec.replicate_count) {
        throw Error(ErrorCategory::config, "replicate index " + std::to_string(replicate_index) +
                                               " outside [0, " +
                                               std::to_string(spec.replicate_count) + ")");
    }
    const SplitSizes sizes = split_sizes(n);
    IndexList perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(derive_seed(spec.master_seed,
                                    {stream::split, static_cast<std::uint64_t>(replicate_index)}));
    std::shuffle(perm.begin(), perm.end(), rng);

    Split s;
    const auto t = static_cast<std::ptrdiff_t>(sizes.train);
    const auto v = static_cast<std::ptrdiff_t>(sizes.valid);
    s.train.assign(perm.begin(), perm.begin() + t);
    s.valid.assign(perm.begin() + t, perm.begin() + t + v);
    s.test.assign(perm.begin() + t + v, perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

[[nodiscard]] inline Split split(const Dataset& ds, const SplitSpec& spec, int replicate_index)
{
    return split(ds.n(), spec, replicate_index);
}

// ---------------------------------------------------------------------------
// Covariate standardization

inline constexpr double min_scale = 1e-8;

struct Scaler {
    std::vector<Eigen::Index> columns;
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> scales;

    void apply(DataMatrix& X) const
    {
        for (std::size_t k = 0; k < columns.size(); ++k) {
            X.col(columns[k]) = (X.col(columns[k]).array() - means[k]) / scales[k];
        }
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j = nlohmann::json::array();
        for (std::size_t k = 0; k < columns.size(); ++k) {
            j.push_back({{"column", names[k]}, {"mean", means[k]}, {"scale", scales[k]}});
        }
        return j;
    }

    /// Rebinds a stored scaler to the columns of `ds` by name.
    [[nodiscard]] static Scaler from_json(const nlohmann::json& j, const Dataset& ds)
    {
        Scaler s;
        for (const auto& e : j) {
            const auto name = e.at("column").get<std::string>();
            auto it = std::find_if(ds.columns.begin(), ds.columns.end(),
                                   [&](const ColumnMeta& c) { return c.name == name; });
            if (it == ds.columns.end()) {
                throw Error(ErrorCategory::data, "scaler column '" + name + "' not in dataset");
            }
            s.columns.push_back(it - ds.columns.begin());
            s.names.push_back(name);
            s.means.push_back(e.at("mean").get<double>());
            s.scales.push_back(e.at("scale").get<double>());
        }
        return s;
    }
};

/// Centers and scales covariate columns by training-row statistics
/// (population standard deviation, floored at 1e-8). SNP columns keep their
/// 0/1/2 coding. The returned dataset covers every row.
[[nodiscard]] inline std::pair<Dataset, Scaler> standardize_covariates(const Dataset& ds,
                                                                       const IndexList& train_idx)
{
    if (train_idx.empty()) {
        throw Error(ErrorCategory::empty_dataset, "standardization needs training rows");
    }
    Scaler scaler;
    const auto m = static_cast<double>(train_idx.size());
    for (Eigen::Index c = 0; c < ds.p(); ++c) {
        if (ds.columns[static_cast<std::size_t>(c)].kind != ColumnKind::covariate) continue;
        double sum = 0.0;
        for (Eigen::Index i : train_idx) sum += ds.X(i, c);
        const double mean = sum / m;
        double ss = 0.0;
        for (Eigen::Index i : train_idx) {
            const double d = ds.X(i, c) - mean;
            ss += d * d;
        }
        scaler.columns.push_back(c);
        scaler.names.push_back(ds.columns[static_cast<std::size_t>(c)].name);
        scaler.means.push_back(mean);
        scaler.scales.push_back(std::max(std::sqrt(ss / m), min_scale));
    }
    Dataset out = ds;
    scaler.apply(out.X);
    return {std::move(out), std::move(scaler)};
}

} // namespace enn
