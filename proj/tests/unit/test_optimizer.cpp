#include "enn/optimizer.hpp"
#include "enn/oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace enn;

namespace {

EnnConfig cfg_with(double tau, double lambda, Activation hidden = Activation::relu,
                   int hidden_units = 3)
{
    EnnConfig c;
    c.tau = tau;
    c.lambda = lambda;
    c.hidden_activation = hidden;
    c.hidden_units = hidden_units;
    return c;
}

struct Problem {
    DataMatrix X;
    Vector y;
};

Problem nonlinear_problem(std::uint64_t seed, Eigen::Index n = 60, Eigen::Index p = 4)
{
    std::mt19937_64 rng(seed);
    Problem pr{test_util::random_matrix(rng, n, p), Vector(n)};
    const Vector noise = test_util::random_vector(rng, n, 0.3);
    for (Eigen::Index i = 0; i < n; ++i) {
        pr.y[i] = std::max(0.0, pr.X(i, 0) + pr.X(i, 1)) - 0.5 * pr.X(i, 2) + noise[i];
    }
    return pr;
}

// Sum of squares of a matrix, computed without Eigen reductions.
double frob_norm(const Eigen::MatrixXd& m)
{
    double s = 0.0;
    for (Eigen::Index k = 0; k < m.size(); ++k) s += m.data()[k] * m.data()[k];
    return std::sqrt(s);
}

} // namespace

TEST(InitParams, DeterministicPerSeed)
{
    EXPECT_TRUE(init_params(7, 4, 99) == init_params(7, 4, 99));
    EXPECT_FALSE(init_params(7, 4, 99) == init_params(7, 4, 100));
}

TEST(InitParams, GlorotBound)
{
    const auto m = init_params(100, 5, 3);
    const double bound1 = std::sqrt(6.0 / 105.0);
    for (Eigen::Index k = 0; k < m.w1.size(); ++k) EXPECT_LE(std::abs(m.w1.data()[k]), bound1);
    const double bound2 = std::sqrt(6.0 / 6.0);
    for (double w : m.w2) EXPECT_LE(std::abs(w), bound2);
    EXPECT_EQ(m.b1.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.b2, 0.0);
    EXPECT_GT(m.w1.cwiseAbs().maxCoeff(), 0.5 * bound1);
}

TEST(InitParams, RejectsEmptyShapes)
{
    EXPECT_THROW((void)init_params(0, 3, 1), Error);
    EXPECT_THROW((void)init_params(3, 0, 1), Error);
}

TEST(Minimize, StationaryStartConvergesImmediately)
{
    std::mt19937_64 rng(201);
    const auto m = test_util::random_params(rng, 3, 2);
    const auto cfg = cfg_with(0.3, 0.0, Activation::tanh, 2);
    const DataMatrix X = test_util::random_matrix(rng, 10, 3);
    const Vector y = forward_batch(m, cfg, X);
    const auto fit = minimize(m, cfg, X, y);
    EXPECT_TRUE(fit.report.converged);
    EXPECT_LE(fit.report.iterations, 1);
    EXPECT_TRUE(fit.params.w1.isApprox(m.w1, 1e-9));
    EXPECT_NEAR(fit.params.b2, m.b2, 1e-9);
}

TEST(Minimize, DoesNotIncreaseRisk)
{
    const auto pr = nonlinear_problem(202);
    const auto cfg = cfg_with(0.75, 0.1);
    const auto p0 = init_params(4, 3, 5);
    const auto fit = minimize(p0, cfg, pr.X, pr.y);
    EXPECT_LE(fit.report.final_risk.total, risk(p0, cfg, pr.X, pr.y).total);
    EXPECT_EQ(fit.report.final_risk.total, risk(fit.params, cfg, pr.X, pr.y).total);
    EXPECT_LE(fit.report.iterations, cfg.max_epochs);
    EXPECT_GE(fit.report.final_grad_norm, 0.0);
    EXPECT_EQ(fit.report.risk_trace.size(), static_cast<std::size_t>(fit.report.iterations) + 1);
}

TEST(Minimize, RiskTraceMonotone)
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto pr = nonlinear_problem(300 + s, 40, 3);
        const auto cfg = cfg_with(0.1 + 0.08 * static_cast<double>(s), s % 2 ? 0.0 : 1.0);
        const auto fit = minimize(init_params(3, 3, s), cfg, pr.X, pr.y);
        for (std::size_t k = 1; k < fit.report.risk_trace.size(); ++k) {
            EXPECT_LE(fit.report.risk_trace[k], fit.report.risk_trace[k - 1] + 1e-12);
        }
    }
}

TEST(Minimize, Deterministic)
{
    const auto pr = nonlinear_problem(203);
    const auto cfg = cfg_with(0.25, 0.1);
    const auto a = minimize(init_params(4, 3, 8), cfg, pr.X, pr.y);
    const auto b = minimize(init_params(4, 3, 8), cfg, pr.X, pr.y);
    EXPECT_TRUE(a.params == b.params);
    EXPECT_EQ(a.report.risk_trace, b.report.risk_trace);
    EXPECT_EQ(a.report.iterations, b.report.iterations);
}

TEST(Minimize, InterceptOnlyMatchesScalarExpectile)
{
    std::mt19937_64 rng(204);
    std::exponential_distribution<double> e(0.5);
    Vector y(80);
    for (auto& v : y) v = e(rng);
    const DataMatrix X = DataMatrix::Zero(80, 2);
    for (double tau : {0.1, 0.5, 0.9}) {
        auto cfg = cfg_with(tau, 0.0, Activation::identity, 2);
        cfg.grad_tolerance = 1e-10;
        const auto fit = minimize(init_params(2, 2, 1), cfg, X, y);
        const double fitted = forward(fit.params, cfg, std::array{0.0, 0.0});
        // independent bisection on the first-order condition
        double lo = y.minCoeff(), hi = y.maxCoeff();
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            double g = 0.0;
            for (double v : y) g += (v > mid ? tau : 1.0 - tau) * (v - mid);
            (g > 0 ? lo : hi) = mid;
        }
        EXPECT_NEAR(fitted, 0.5 * (lo + hi), 1e-6) << "tau " << tau;
    }
}

TEST(Minimize, LinearCaseMatchesReweightedLeastSquares)
{
    std::mt19937_64 rng(205);
    const DataMatrix X = test_util::random_matrix(rng, 300, 3);
    Vector y = (X * Eigen::Vector3d(1.0, -2.0, 0.5)).array() + 0.7;
    y += test_util::random_vector(rng, 300, 0.5);
    auto cfg = cfg_with(0.8, 0.0, Activation::identity, 2);
    cfg.grad_tolerance = 1e-10;
    cfg.max_epochs = 5000;
    const auto fit = minimize(init_params(3, 2, 4), cfg, X, y);
    const auto ref = oracle::linear_expectile_fit(X, y, 0.8, 0.0);
    ASSERT_TRUE(ref.converged);
    const Vector beta = fit.params.w1 * fit.params.w2;
    const double intercept = fit.params.b1.dot(fit.params.w2) + fit.params.b2;
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(beta[j], ref.coefficients[j], 1e-4);
    EXPECT_NEAR(intercept, ref.intercept, 1e-4);
}

TEST(Minimize, HugePenaltyShrinksWeights)
{
    const auto pr = nonlinear_problem(206);
    const auto cfg = cfg_with(0.5, 1e6);
    const auto fit = minimize(init_params(4, 3, 2), cfg, pr.X, pr.y);
    EXPECT_LE(frob_norm(fit.params.w1) + frob_norm(fit.params.w2), 1e-3);
}

TEST(Minimize, NonFiniteRiskReportsIteration)
{
    ModelParams m(1, 1);
    m.b2 = 1.0;
    Vector y(2);
    y << 1.0, std::numeric_limits<double>::infinity();
    try {
        (void)minimize(m, cfg_with(0.5, 0.0), DataMatrix::Zero(2, 1), y);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::numerical);
        EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos) << e.what();
    }
}

TEST(MinimizeMasked, FreezeAllReturnsStart)
{
    const auto pr = nonlinear_problem(207);
    const auto p0 = init_params(4, 3, 6);
    const auto fit = minimize_masked(p0, cfg_with(0.5, 0.1), pr.X, pr.y, FreezeSpec::all());
    EXPECT_TRUE(fit.params == p0);
    EXPECT_EQ(fit.report.iterations, 0);
    EXPECT_EQ(fit.report.risk_trace.size(), 1u);
}

TEST(MinimizeMasked, FreezeNoneMatchesMinimize)
{
    const auto pr = nonlinear_problem(208);
    const auto p0 = init_params(4, 3, 6);
    const auto cfg = cfg_with(0.3, 0.1);
    const auto a = minimize_masked(p0, cfg, pr.X, pr.y, FreezeSpec::none());
    const auto b = minimize(p0, cfg, pr.X, pr.y);
    EXPECT_TRUE(a.params == b.params);
    EXPECT_EQ(a.report.risk_trace, b.report.risk_trace);
}

TEST(MinimizeMasked, InputLayerFrozenThroughout)
{
    const auto pr = nonlinear_problem(209);
    const auto p0 = init_params(4, 3, 6);
    const auto cfg = cfg_with(0.6, 0.1);
    auto opt = OptimOptions::from(cfg);
    int calls = 0;
    double max_dw1 = 0.0, max_db1 = 0.0;
    opt.observer = [&](int, const Gradient& g, const RiskValue&) {
        ++calls;
        max_dw1 = std::max(max_dw1, g.d_w1.cwiseAbs().maxCoeff());
        max_db1 = std::max(max_db1, g.d_b1.cwiseAbs().maxCoeff());
    };
    const auto fit = minimize_masked(p0, Objective::expectile(cfg), opt, pr.X, pr.y,
                                     FreezeSpec::input_layer());
    EXPECT_GT(calls, 2);
    EXPECT_EQ(max_dw1, 0.0);
    EXPECT_EQ(max_db1, 0.0);
    EXPECT_TRUE(fit.params.w1 == p0.w1);
    EXPECT_TRUE(fit.params.b1 == p0.b1);
    EXPECT_FALSE(fit.params.w2 == p0.w2);
}

TEST(FreezeSpec, Parse)
{
    EXPECT_EQ(parse_freeze("w1b1"), FreezeSpec::input_layer());
    EXPECT_EQ(parse_freeze("none"), FreezeSpec::none());
    EXPECT_EQ(parse_freeze("all"), FreezeSpec::all());
    EXPECT_THROW((void)parse_freeze("w2"), Error);
    EXPECT_EQ(to_string(FreezeSpec::input_layer()), "w1b1");
}
