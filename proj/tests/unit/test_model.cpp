#include "enn/model.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <random>

using namespace enn;

namespace {

EnnConfig config(Activation hidden, Activation output)
{
    EnnConfig c;
    c.hidden_activation = hidden;
    c.output_activation = output;
    return c;
}

} // namespace

TEST(Forward, ZeroWeightsPassOnlyOutputBias)
{
    ModelParams m(4, 3);
    m.b2 = 3.5;
    const std::array<double, 4> x{1.0, -2.0, 7.0, 0.25};
    EXPECT_EQ(forward(m, config(Activation::relu, Activation::identity), x), 3.5);
    EXPECT_EQ(forward(m, config(Activation::tanh, Activation::identity), x), 3.5);
}

TEST(Forward, HandEvaluatedReluUnit)
{
    ModelParams m(1, 1);
    m.w1(0, 0) = 2.0;
    m.b1[0] = -1.0;
    m.w2[0] = 3.0;
    const auto cfg = config(Activation::relu, Activation::identity);
    EXPECT_DOUBLE_EQ(forward(m, cfg, std::array{1.0}), 3.0);
    EXPECT_EQ(forward(m, cfg, std::array{0.0}), 0.0);
}

TEST(Forward, MatchesIndependentEvaluation)
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
        const auto m = test_util::random_params(rng, 6, 4);
        const Vector x = test_util::random_vector(rng, 6);
        const double got = forward(m, config(Activation::relu, Activation::identity),
                                   std::span<const double>(x.data(), 6));
        EXPECT_NEAR(got, test_util::naive_forward(m, test_util::relu_fn, test_util::identity_fn, x),
                    1e-12 * (1.0 + std::abs(got)));
    }
}

TEST(Forward, DimensionMismatchNamesLengths)
{
    ModelParams m(3, 2);
    try {
        (void)forward(m, EnnConfig{}, std::array{1.0, 2.0});
        FAIL() << "expected a dimension error";
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::dimension);
        EXPECT_NE(std::string(e.what()).find("expected 3"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("got 2"), std::string::npos);
    }
}

TEST(ForwardBatch, EmptyBatch)
{
    ModelParams m(3, 2);
    DataMatrix X(0, 3);
    EXPECT_EQ(forward_batch(m, EnnConfig{}, X).size(), 0);
}

TEST(ForwardBatch, ZeroParamsGiveConstant)
{
    ModelParams m(3, 2);
    m.b2 = -1.25;
    std::mt19937_64 rng(1);
    const Vector out = forward_batch(m, EnnConfig{}, test_util::random_matrix(rng, 7, 3));
    for (double v : out) EXPECT_EQ(v, -1.25);
}

TEST(ForwardBatch, RowsMatchSingleCallsBitwise)
{
    std::mt19937_64 rng(5);
    for (auto act : {Activation::relu, Activation::sigmoid, Activation::tanh, Activation::identity}) {
        const auto m = test_util::random_params(rng, 3, 4);
        const DataMatrix X = test_util::random_matrix(rng, 5, 3);
        const auto cfg = config(act, Activation::identity);
        const Vector out = forward_batch(m, cfg, X);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            EXPECT_EQ(out[i], forward(m, cfg, std::span<const double>(X.row(i).data(), 3)));
        }
    }
}

TEST(ForwardBatch, ColumnMismatch)
{
    ModelParams m(3, 2);
    EXPECT_THROW((void)forward_batch(m, EnnConfig{}, DataMatrix::Zero(4, 2)), Error);
}

TEST(ParamCount, Examples)
{
    EXPECT_EQ(param_count(ModelParams(1, 1)), 4);
    EXPECT_EQ(param_count(ModelParams(149, 5)), 756);
    EXPECT_EQ(param_count(ModelParams(165, 3)), 502);
}

TEST(ForwardProperty, LinearCollapse)
{
    std::mt19937_64 rng(21);
    const auto cfg = config(Activation::identity, Activation::identity);
    for (int t = 0; t < 100; ++t) {
        const auto m = test_util::random_params(rng, 5, 3);
        const Vector beta = m.w1 * m.w2;
        const double intercept = m.b1.dot(m.w2) + m.b2;
        const Vector x = test_util::random_vector(rng, 5, 3.0);
        const double got = forward(m, cfg, std::span<const double>(x.data(), 5));
        EXPECT_NEAR(got, x.dot(beta) + intercept, 1e-10 * (1.0 + std::abs(got)));
    }
}

TEST(ForwardProperty, PositiveHomogeneityWithoutBiases)
{
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> alpha(0.0, 10.0);
    const auto cfg = config(Activation::relu, Activation::relu);
    for (int t = 0; t < 100; ++t) {
        auto m = test_util::random_params(rng, 4, 5);
        m.b1.setZero();
        m.b2 = 0.0;
        const Vector x = test_util::random_vector(rng, 4);
        const double a = alpha(rng);
        const Vector ax = a * x;
        const double lhs = forward(m, cfg, std::span<const double>(ax.data(), 4));
        const double rhs = a * forward(m, cfg, std::span<const double>(x.data(), 4));
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(rhs)));
    }
}

TEST(ModelParams, ValidateCatchesNonFinite)
{
    ModelParams m(2, 2);
    EXPECT_NO_THROW(m.validate());
    m.w2[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(m.validate(), Error);
}

TEST(EnnConfig, RejectsOutOfRangeSettings)
{
    EnnConfig c;
    c.tau = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c.tau = 0.3;
    c.lambda = -1.0;
    EXPECT_THROW(c.validate(), Error);
    c.lambda = 0.0;
    c.output_activation = Activation::tanh;
    EXPECT_THROW(c.validate(), Error);
    c.output_activation = Activation::sigmoid;
    EXPECT_NO_THROW(c.validate());
}

TEST(Activation, ReluDerivativeAtZeroIsZero)
{
    EXPECT_EQ(activate_derivative(Activation::relu, 0.0, 0.0), 0.0);
    EXPECT_EQ(activate_derivative(Activation::relu, 1e-300, 1e-300), 1.0);
    EXPECT_THROW((void)parse_activation("softplus"), Error);
}
