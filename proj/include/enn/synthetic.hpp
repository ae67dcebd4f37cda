#pragma once

// Simulated genotype/phenotype pairs standing in for access-controlled
// cohorts. Two phenotypes ("source" and "target") are driven by sparse relu
// features of the SNPs; a configurable share of the target's signal variance
// comes from the source's features.

#include "enn/dataio.hpp"
#include "enn/seed.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace enn {

enum class NoiseModel { homoscedastic_normal, heteroscedastic, skewed };
enum class LinkFamily { sparse_nonlinear_shared };

[[nodiscard]] inline NoiseModel parse_noise(const std::string& s)
{
    if (s == "homoscedastic-normal") return NoiseModel::homoscedastic_normal;
    if (s == "heteroscedastic") return NoiseModel::heteroscedastic;
    if (s == "skewed") return NoiseModel::skewed;
    throw Error(ErrorCategory::config, "unknown noise model '" + s + "'");
}

[[nodiscard]] inline std::string to_string(NoiseModel m)
{
    switch (m) {
    case NoiseModel::homoscedastic_normal: return "homoscedastic-normal";
    case NoiseModel::heteroscedastic: return "heteroscedastic";
    case NoiseModel::skewed: return "skewed";
    }
    return "?";
}

struct SyntheticSpec {
    Eigen::Index n = 1000;
    Eigen::Index p_snps = 20;
    double maf_low = 0.05;
    double maf_high = 0.5;
    LinkFamily link = LinkFamily::sparse_nonlinear_shared;
    double shared_signal_fraction = 0.7;
    NoiseModel noise = NoiseModel::homoscedastic_normal;
    std::uint64_t seed = 0;

    /// relu features per signal component and SNPs feeding each feature.
    int features = 3;
    int snps_per_feature = 3;
    double baseline = 50.0;
    double signal_sd = 10.0;
    double noise_sd = 10.0;
    /// Noise level of the source column; unset means noise_sd.
    std::optional<double> source_noise_sd;
    std::optional<std::uint64_t> source_noise_seed;
    std::optional<std::uint64_t> target_noise_seed;

    void validate() const
    {
        if (n < 1 || p_snps < 1) throw Error(ErrorCategory::config, "synthetic n and p_snps must be >= 1");
        if (!(maf_low > 0.0 && maf_low <= maf_high && maf_high <= 0.5)) {
            throw Error(ErrorCategory::config, "maf range must satisfy 0 < low <= high <= 0.5");
        }
        if (!(shared_signal_fraction >= 0.0 && shared_signal_fraction <= 1.0)) {
            throw Error(ErrorCategory::config, "shared_signal_fraction must lie in [0,1]");
        }
        if (features < 1 || snps_per_feature < 1 || snps_per_feature > p_snps) {
            throw Error(ErrorCategory::config, "invalid feature layout for the SNP count");
        }
        if (!(signal_sd >= 0.0) || !(noise_sd >= 0.0)) {
            throw Error(ErrorCategory::config, "signal_sd and noise_sd must be >= 0");
        }
        if (source_noise_sd && !(*source_noise_sd >= 0.0)) {
            throw Error(ErrorCategory::config, "source_noise_sd must be >= 0");
        }
    }

    [[nodiscard]] static SyntheticSpec from_json(const nlohmann::json& j)
    {
        try {
            SyntheticSpec s;
            s.n = j.value("n", s.n);
            s.p_snps = j.value("p_snps", s.p_snps);
            if (j.contains("maf_range")) {
                const auto r = j.at("maf_range").get<std::vector<double>>();
                if (r.size() != 2) throw Error(ErrorCategory::config, "maf_range needs two values");
                s.maf_low = r[0];
                s.maf_high = r[1];
            }
            if (j.contains("link") && j.at("link").get<std::string>() != "sparse-nonlinear-shared") {
                throw Error(ErrorCategory::config, "unknown link family");
            }
            s.shared_signal_fraction = j.value("shared_signal_fraction", s.shared_signal_fraction);
            if (j.contains("noise")) s.noise = parse_noise(j.at("noise").get<std::string>());
            s.seed = j.value("seed", s.seed);
            s.features = j.value("features", s.features);
            s.snps_per_feature = j.value("snps_per_feature", s.snps_per_feature);
            s.baseline = j.value("baseline", s.baseline);
            s.signal_sd = j.value("signal_sd", s.signal_sd);
            s.noise_sd = j.value("noise_sd", s.noise_sd);
            if (j.contains("source_noise_sd")) s.source_noise_sd = j.at("source_noise_sd").get<double>();
            if (j.contains("source_noise_seed")) s.source_noise_seed = j.at("source_noise_seed").get<std::uint64_t>();
            if (j.contains("target_noise_seed")) s.target_noise_seed = j.at("target_noise_seed").get<std::uint64_t>();
            s.validate();
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCategory::config, std::string("malformed synthetic spec: ") + e.what());
        }
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json j{{"n", n},
                         {"p_snps", p_snps},
                         {"maf_range", {maf_low, maf_high}},
                         {"link", "sparse-nonlinear-shared"},
                         {"shared_signal_fraction", shared_signal_fraction},
                         {"noise", to_string(noise)},
                         {"seed", seed},
                         {"features", features},
                         {"snps_per_feature", snps_per_feature},
                         {"baseline", baseline},
                         {"signal_sd", signal_sd},
                         {"noise_sd", noise_sd}};
        if (source_noise_sd) j["source_noise_sd"] = *source_noise_sd;
        if (source_noise_seed) j["source_noise_seed"] = *source_noise_seed;
        if (target_noise_seed) j["target_noise_seed"] = *target_noise_seed;
        return j;
    }
};

struct SyntheticData {
    Dataset dataset;
    nlohmann::json truth;
};

inline constexpr const char* source_column = "source";
inline constexpr const char* target_column = "target";

namespace detail {

struct ReluFeature {
    std::vector<Eigen::Index> snps;
    std::vector<double> weights;
    double threshold = 0.0;
    double coefficient = 1.0;
};

inline double signed_uniform(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    std::bernoulli_distribution sign(0.5);
    const double m = mag(rng);
    return sign(rng) ? m : -m;
}

inline std::vector<ReluFeature> draw_features(std::mt19937_64& rng, const DataMatrix& X,
                                              std::vector<Eigen::Index>& pool, int count, int width)
{
    std::vector<ReluFeature> out;
    for (int k = 0; k < count; ++k) {
        ReluFeature f;
        for (int j = 0; j < width; ++j) {
            if (pool.empty()) {
                pool.resize(static_cast<std::size_t>(X.cols()));
                std::iota(pool.begin(), pool.end(), Eigen::Index{0});
                std::shuffle(pool.begin(), pool.end(), rng);
            }
            f.snps.push_back(pool.back());
            pool.pop_back();
            f.weights.push_back(signed_uniform(rng));
        }
        // Threshold at the sample mean of the linear score so each feature is
        // active for a sizeable share of individuals.
        double mean = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (std::size_t j = 0; j < f.snps.size(); ++j) mean += f.weights[j] * X(i, f.snps[j]);
        }
        f.threshold = mean / static_cast<double>(X.rows());
        f.coefficient = signed_uniform(rng);
        out.push_back(std::move(f));
    }
    return out;
}

inline Vector evaluate_features(const std::vector<ReluFeature>& fs, const DataMatrix& X)
{
    Vector s = Vector::Zero(X.rows());
    for (const auto& f : fs) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            double z = -f.threshold;
            for (std::size_t j = 0; j < f.snps.size(); ++j) z += f.weights[j] * X(i, f.snps[j]);
            s[i] += f.coefficient * std::max(z, 0.0);
        }
    }
    return s;
}

/// Population z-score; a constant vector maps to zeros.
inline Vector zscore(const Vector& v, double& mean, double& sd)
{
    mean = v.mean();
    sd = std::sqrt((v.array() - mean).square().mean());
    if (!(sd > 0.0)) return Vector::Zero(v.size());
    return (v.array() - mean) / sd;
}

inline nlohmann::json features_json(const std::vector<ReluFeature>& fs)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : fs) {
        a.push_back({{"snps", f.snps},
                     {"weights", f.weights},
                     {"threshold", f.threshold},
                     {"coefficient", f.coefficient}});
    }
    return a;
}

} // namespace detail

[[nodiscard]] inline SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    const Eigen::Index n = spec.n;
    const Eigen::Index p = spec.p_snps;

    std::mt19937_64 geno_rng(derive_seed(spec.seed, {stream::genotype}));
    std::uniform_real_distribution<double> maf_dist(spec.maf_low, spec.maf_high);
    std::vector<double> mafs(static_cast<std::size_t>(p));
    for (auto& m : mafs) m = maf_dist(geno_rng);

    // Redraw a SNP that came out monomorphic so every column carries signal.
    DataMatrix X(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        std::bernoulli_distribution allele(mafs[static_cast<std::size_t>(j)]);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (Eigen::Index i = 0; i < n; ++i) {
                X(i, j) = static_cast<double>(static_cast<int>(allele(geno_rng)) +
                                              static_cast<int>(allele(geno_rng)));
            }
            if (n < 2 || (X.col(j).array() != X(0, j)).any()) break;
        }
    }

    std::mt19937_64 struct_rng(derive_seed(spec.seed, {stream::structure}));
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    std::shuffle(pool.begin(), pool.end(), struct_rng);
    const auto shared =
        detail::draw_features(struct_rng, X, pool, spec.features, spec.snps_per_feature);
    const auto own = detail::draw_features(struct_rng, X, pool, spec.features, spec.snps_per_feature);

    double shared_mean = 0.0, shared_sd = 0.0, own_mean = 0.0, own_sd = 0.0;
    const Vector z_shared = detail::zscore(detail::evaluate_features(shared, X), shared_mean, shared_sd);
    const Vector z_own = detail::zscore(detail::evaluate_features(own, X), own_mean, own_sd);
    const double f = spec.shared_signal_fraction;
    const Vector target_signal = std::sqrt(f) * z_shared + std::sqrt(1.0 - f) * z_own;

    // Heteroscedastic scale follows the genotypes of the first shared feature.
    Vector scale = Vector::Ones(n);
    if (spec.noise == NoiseModel::heteroscedastic) {
        const auto& snps = shared.front().snps;
        for (Eigen::Index i = 0; i < n; ++i) {
            double g = 0.0;
            for (Eigen::Index s : snps) g += X(i, s);
            scale[i] = 0.25 + 0.75 * g / static_cast<double>(snps.size());
        }
    }
    auto noise = [&](std::uint64_t seed, double sd) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::exponential_distribution<double> expo(1.0);
        Vector e(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double draw = spec.noise == NoiseModel::skewed ? expo(rng) - 1.0 : normal(rng);
            e[i] = sd * scale[i] * draw;
        }
        return e;
    };
    const std::uint64_t source_seed =
        spec.source_noise_seed.value_or(derive_seed(spec.seed, {stream::source_noise}));
    const std::uint64_t target_seed =
        spec.target_noise_seed.value_or(derive_seed(spec.seed, {stream::target_noise}));

    SyntheticData out;
    Dataset& ds = out.dataset;
    ds.X = std::move(X);
    for (Eigen::Index j = 0; j < p; ++j) {
        ColumnMeta meta{"snp_" + std::to_string(j + 1), ColumnKind::snp, {}};
        for (double g : {0.0, 1.0, 2.0}) {
            if ((ds.X.col(j).array() == g).any()) meta.observed_values.push_back(g);
        }
        ds.columns.push_back(std::move(meta));
    }
    ds.phenotypes[source_column] =
        (spec.baseline + spec.signal_sd * z_shared.array()).matrix() +
        noise(source_seed, spec.source_noise_sd.value_or(spec.noise_sd));
    ds.phenotypes[target_column] =
        (spec.baseline + spec.signal_sd * target_signal.array()).matrix() +
        noise(target_seed, spec.noise_sd);

    out.truth = {{"spec", spec.to_json()},
                 {"maf", mafs},
                 {"shared_features", detail::features_json(shared)},
                 {"target_only_features", detail::features_json(own)},
                 {"shared_signal_mean", shared_mean},
                 {"shared_signal_sd", shared_sd},
                 {"target_only_signal_mean", own_mean},
                 {"target_only_signal_sd", own_sd},
                 {"source_noise_seed", source_seed},
                 {"target_noise_seed", target_seed},
                 {"phenotypes", {source_column, target_column}}};
    return out;
}

} // namespace enn
