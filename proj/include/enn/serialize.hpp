#pragma once

#include "enn/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace enn {

inline constexpr int model_schema_version = 1;

/// A fitted network together with the settings that define its predictions.
struct SavedModel {
    ModelParams params;
    EnnConfig config;
    nlohmann::json training_meta = nlohmann::json::object();
};

[[nodiscard]] inline nlohmann::json to_json(const SavedModel& m)
{
    nlohmann::json j;
    j["schema_version"] = model_schema_version;
    j["p"] = m.params.p();
    j["q"] = m.params.q();
    j["tau"] = m.config.tau;
    j["lambda"] = m.config.lambda;
    j["hidden_activation"] = std::string(to_string(m.config.hidden_activation));
    j["output_activation"] = std::string(to_string(m.config.output_activation));
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.params.p(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.params.q(); ++c) {
            row.push_back(m.params.w1(r, c));
        }
        rows.push_back(std::move(row));
    }
    j["w1"] = std::move(rows);
    j["b1"] = std::vector<double>(m.params.b1.begin(), m.params.b1.end());
    j["w2"] = std::vector<double>(m.params.w2.begin(), m.params.w2.end());
    j["b2"] = m.params.b2;
    j["training_meta"] = m.training_meta;
    return j;
}

[[nodiscard]] inline SavedModel model_from_json(const nlohmann::json& j)
{
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != model_schema_version) {
            throw Error(ErrorCategory::data,
                        "unsupported model schema_version " + std::to_string(version));
        }
        const auto p = j.at("p").get<Eigen::Index>();
        const auto q = j.at("q").get<Eigen::Index>();
        SavedModel m;
        m.params = ModelParams(p, q);
        m.config.tau = j.at("tau").get<double>();
        m.config.lambda = j.at("lambda").get<double>();
        m.config.hidden_units = static_cast<int>(q);
        m.config.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
        m.config.output_activation = parse_activation(j.at("output_activation").get<std::string>());

        const auto& w1 = j.at("w1");
        require_dims("w1 rows", p, static_cast<long>(w1.size()));
        for (Eigen::Index r = 0; r < p; ++r) {
            const auto& row = w1.at(static_cast<std::size_t>(r));
            require_dims("w1 row length", q, static_cast<long>(row.size()));
            for (Eigen::Index c = 0; c < q; ++c) {
                m.params.w1(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
            }
        }
        const auto b1 = j.at("b1").get<std::vector<double>>();
        const auto w2 = j.at("w2").get<std::vector<double>>();
        require_dims("b1 length", q, static_cast<long>(b1.size()));
        require_dims("w2 length", q, static_cast<long>(w2.size()));
        m.params.b1 = Eigen::Map<const Vector>(b1.data(), q);
        m.params.w2 = Eigen::Map<const Vector>(w2.data(), q);
        m.params.b2 = j.at("b2").get<double>();
        if (j.contains("training_meta")) {
            m.training_meta = j.at("training_meta");
        }
        m.params.validate();
        m.config.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::data, std::string("malformed model JSON: ") + e.what());
    }
}

inline void save_model(const SavedModel& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write model file " + path);
    }
    out << to_json(m).dump(2) << '\n';
}

[[nodiscard]] inline SavedModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot read model file " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::data, "model file " + path + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

} // namespace enn
