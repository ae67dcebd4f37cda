#include "enn/serialize.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

using namespace enn;

namespace {

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

SavedModel awkward_model()
{
    std::mt19937_64 rng(701);
    SavedModel m{test_util::random_params(rng, 3, 2, 1e-3), EnnConfig{}, nlohmann::json::object()};
    m.params.w1(0, 0) = 0.1 + 0.2;
    m.params.w1(2, 1) = 5e-324;
    m.params.b1[0] = -1.7976931348623157e308;
    m.params.w2[1] = 1.0 / 3.0;
    m.params.b2 = -0.0;
    m.config.tau = 0.1;
    m.config.lambda = 0.1;
    m.config.hidden_units = 2;
    m.config.hidden_activation = Activation::tanh;
    m.config.output_activation = Activation::sigmoid;
    m.training_meta = {{"replicate", 3}};
    return m;
}

} // namespace

TEST(ModelJson, Fields)
{
    const auto j = to_json(awkward_model());
    for (const char* key : {"schema_version", "p", "q", "tau", "lambda", "hidden_activation",
                            "output_activation", "w1", "b1", "w2", "b2", "training_meta"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["p"], 3);
    EXPECT_EQ(j["q"], 2);
    EXPECT_EQ(j["w1"].size(), 3u);
    EXPECT_EQ(j["w1"][0].size(), 2u);
    EXPECT_EQ(j["hidden_activation"], "tanh");
}

TEST(ModelJson, BitwiseRoundTripThroughText)
{
    const auto m = awkward_model();
    const auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
    for (Eigen::Index k = 0; k < m.params.w1.size(); ++k) {
        EXPECT_TRUE(bitwise_equal(m.params.w1.data()[k], back.params.w1.data()[k])) << k;
    }
    for (Eigen::Index q = 0; q < 2; ++q) {
        EXPECT_TRUE(bitwise_equal(m.params.b1[q], back.params.b1[q]));
        EXPECT_TRUE(bitwise_equal(m.params.w2[q], back.params.w2[q]));
    }
    EXPECT_TRUE(bitwise_equal(m.params.b2, back.params.b2));
    EXPECT_EQ(back.config.tau, 0.1);
    EXPECT_EQ(back.config.output_activation, Activation::sigmoid);
    EXPECT_EQ(back.training_meta["replicate"], 3);
}

TEST(ModelJson, FileRoundTrip)
{
    const auto path = (std::filesystem::temp_directory_path() / "enn_model_roundtrip.json").string();
    const auto m = awkward_model();
    save_model(m, path);
    const auto back = load_model(path);
    std::filesystem::remove(path);
    EXPECT_TRUE(back.params == m.params);
}

TEST(ModelJson, RejectsInconsistentShapes)
{
    auto j = to_json(awkward_model());
    j["q"] = 3;
    EXPECT_THROW((void)model_from_json(j), Error);
    j = to_json(awkward_model());
    j["schema_version"] = 99;
    EXPECT_THROW((void)model_from_json(j), Error);
    EXPECT_THROW((void)load_model("/nonexistent/model.json"), Error);
}
