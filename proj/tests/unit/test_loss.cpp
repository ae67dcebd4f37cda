#include "enn/loss.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace enn;

namespace {

// Direct transcription of the two branches, kept apart from the library.
double reference_loss(double tau, double y, double f)
{
    const double r = y - f;
    return (r < 0 ? 1.0 - tau : tau) * r * r;
}

ModelParams hand_model()
{
    ModelParams m(1, 1);
    m.w1(0, 0) = 2.0;
    m.b1[0] = -1.0;
    m.w2[0] = 3.0;
    return m;
}

EnnConfig cfg_with(double tau, double lambda, Activation hidden = Activation::relu,
                   Activation output = Activation::identity)
{
    EnnConfig c;
    c.tau = tau;
    c.lambda = lambda;
    c.hidden_activation = hidden;
    c.output_activation = output;
    return c;
}

} // namespace

TEST(LossTau, Examples)
{
    EXPECT_EQ(loss_tau(0.5, 2.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(loss_tau(0.9, 2.0, 1.0), 0.9);
    EXPECT_DOUBLE_EQ(loss_tau(0.9, 1.0, 2.0), 0.1);
    for (double tau : {0.01, 0.3, 0.5, 0.99}) EXPECT_EQ(loss_tau(tau, 4.2, 4.2), 0.0);
}

TEST(LossTau, RejectsTauOutsideUnitInterval)
{
    for (double tau : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
        try {
            (void)loss_tau(tau, 1.0, 0.0);
            FAIL() << "tau " << tau << " accepted";
        } catch (const Error& e) {
            EXPECT_EQ(e.category(), ErrorCategory::config);
        }
    }
}

TEST(LossTauDerivative, Examples)
{
    for (double tau : {0.1, 0.5, 0.9}) EXPECT_EQ(loss_tau_derivative(tau, 3.0, 3.0), 0.0);
    EXPECT_DOUBLE_EQ(loss_tau_derivative(0.9, 1.0, 2.0), 0.2);
}

TEST(LossTauDerivative, MatchesCentralDifferences)
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> tau_d(0.01, 0.99), v(-10.0, 10.0);
    int checked = 0;
    while (checked < 100) {
        const double tau = tau_d(rng), y = v(rng), f = v(rng);
        if (std::abs(y - f) <= 1e-3) continue;
        const double h = 1e-6 * std::max(1.0, std::abs(f));
        const double numeric = test_util::central_difference(
            [&](double ff) { return reference_loss(tau, y, ff); }, f, h);
        const double analytic = loss_tau_derivative(tau, y, f);
        EXPECT_LE(std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-12), 1e-6)
            << "tau=" << tau << " y=" << y << " f=" << f;
        ++checked;
    }
}

TEST(LossTauProperty, HalfSquaredErrorAtMedianLevel)
{
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> v(-100.0, 100.0);
    for (int t = 0; t < 1000; ++t) {
        const double y = v(rng), f = v(rng);
        EXPECT_EQ(loss_tau(0.5, y, f), 0.5 * (y - f) * (y - f));
    }
}

TEST(LossTauProperty, ReflectionSymmetry)
{
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> tau_d(0.01, 0.99), v(-10.0, 10.0);
    for (int t = 0; t < 1000; ++t) {
        const double tau = tau_d(rng), y = v(rng), f = v(rng);
        EXPECT_NEAR(loss_tau(tau, y, f), loss_tau(1.0 - tau, -y, -f),
                    1e-14 * (1.0 + loss_tau(tau, y, f)));
    }
}

TEST(LossTauProperty, ConvexInPrediction)
{
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> tau_d(0.01, 0.99), v(-10.0, 10.0);
    for (int t = 0; t < 1000; ++t) {
        const double tau = tau_d(rng), y = v(rng), a = v(rng), b = v(rng);
        const double mid = loss_tau(tau, y, 0.5 * (a + b));
        EXPECT_LE(mid, 0.5 * (loss_tau(tau, y, a) + loss_tau(tau, y, b)) + 1e-12);
    }
}

TEST(Risk, ZeroModelZeroResponse)
{
    ModelParams m(3, 2);
    std::mt19937_64 rng(1);
    const auto r = risk(m, cfg_with(0.3, 0.0), test_util::random_matrix(rng, 4, 3), Vector::Zero(4));
    EXPECT_EQ(r.total, 0.0);
}

TEST(Risk, PenaltyHandEvaluation)
{
    ModelParams m(1, 1);
    m.w1(0, 0) = 1.0;
    m.w2[0] = 2.0;
    const auto r = risk(m, cfg_with(0.5, 10.0), DataMatrix::Zero(1, 1), Vector::Zero(1));
    EXPECT_EQ(r.penalty, 50.0);
    EXPECT_EQ(r.empirical, 0.0);
    EXPECT_EQ(r.total, 50.0);
}

TEST(Risk, SinglePointHandModel)
{
    DataMatrix X(1, 1);
    X(0, 0) = 1.0;
    Vector y(1);
    y[0] = 5.0;
    const auto r = risk(hand_model(), cfg_with(0.5, 0.0), X, y);
    EXPECT_DOUBLE_EQ(r.total, 2.0);
}

TEST(Risk, MatchesIndependentComputation)
{
    std::mt19937_64 rng(105);
    for (int t = 0; t < 20; ++t) {
        const auto m = test_util::random_params(rng, 3, 4);
        const DataMatrix X = test_util::random_matrix(rng, 9, 3);
        const Vector y = test_util::random_vector(rng, 9);
        const double tau = 0.05 + 0.045 * t, lambda = 0.05 * t;
        double emp = 0.0;
        for (Eigen::Index i = 0; i < 9; ++i) {
            const Vector x = X.row(i).transpose();
            emp += reference_loss(tau, y[i],
                                  test_util::naive_forward(m, test_util::relu_fn,
                                                         test_util::identity_fn, x));
        }
        emp /= 9.0;
        const double pen = lambda * (m.w1.squaredNorm() + m.w2.squaredNorm());
        const auto r = risk(m, cfg_with(tau, lambda), X, y);
        EXPECT_NEAR(r.empirical, emp, 1e-12 * (1.0 + emp));
        EXPECT_NEAR(r.penalty, pen, 1e-12 * (1.0 + pen));
        EXPECT_NEAR(r.total, r.empirical + r.penalty, 1e-15 * (1.0 + r.total));
    }
}

TEST(Risk, EmptyDatasetAndMismatch)
{
    ModelParams m(2, 2);
    try {
        (void)risk(m, cfg_with(0.5, 0.0), DataMatrix(0, 2), Vector(0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::empty_dataset);
    }
    EXPECT_THROW((void)risk(m, cfg_with(0.5, 0.0), DataMatrix::Zero(3, 2), Vector::Zero(2)),
                 Error);
    EXPECT_THROW((void)risk(m, cfg_with(0.5, 0.0), DataMatrix::Zero(3, 1), Vector::Zero(3)),
                 Error);
}

TEST(RiskProperty, PermutationInvariant)
{
    std::mt19937_64 rng(106);
    const auto m = test_util::random_params(rng, 4, 3);
    const DataMatrix X = test_util::random_matrix(rng, 12, 4);
    const Vector y = test_util::random_vector(rng, 12);
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DataMatrix Xp(12, 4);
    Vector yp(12);
    for (int i = 0; i < 12; ++i) {
        Xp.row(i) = X.row(perm[i]);
        yp[i] = y[perm[i]];
    }
    const auto cfg = cfg_with(0.8, 0.3);
    EXPECT_NEAR(risk(m, cfg, X, y).total, risk(m, cfg, Xp, yp).total, 1e-13);
}

TEST(RiskGradient, ZeroAtPerfectFit)
{
    std::mt19937_64 rng(107);
    const auto m = test_util::random_params(rng, 3, 2);
    const auto cfg = cfg_with(0.7, 0.0);
    const DataMatrix X = test_util::random_matrix(rng, 6, 3);
    const Vector y = forward_batch(m, cfg, X);
    const auto g = risk_gradient(m, cfg, X, y);
    EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(RiskGradient, PureRidge)
{
    std::mt19937_64 rng(108);
    auto m = test_util::random_params(rng, 3, 2);
    m.b1.setZero();
    m.b2 = 0.0;
    const auto cfg = cfg_with(0.4, 2.5);
    const DataMatrix X = DataMatrix::Zero(5, 3);
    const Vector y = Vector::Zero(5);
    const auto g = risk_gradient(m, cfg, X, y);
    EXPECT_TRUE(g.d_w1.isApprox(2.0 * 2.5 * m.w1, 1e-15));
    EXPECT_TRUE(g.d_w2.isApprox(2.0 * 2.5 * m.w2, 1e-15));
    EXPECT_EQ(g.d_b1.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.d_b2, 0.0);
}

TEST(CheckGradient, PassesOnSmoothInstance)
{
    std::mt19937_64 rng(109);
    const auto m = test_util::random_params(rng, 4, 3);
    const DataMatrix X = test_util::random_matrix(rng, 8, 4);
    const Vector y = test_util::random_vector(rng, 8, 3.0);
    for (auto act : {Activation::sigmoid, Activation::tanh}) {
        const auto report = check_gradient(m, cfg_with(0.3, 1.0, act), X, y, 1e-6, 1e-6);
        EXPECT_TRUE(report.passed()) << "max rel " << report.max_rel();
    }
}

TEST(CheckGradient, FlagsCorruptedEntry)
{
    std::mt19937_64 rng(110);
    const auto m = test_util::random_params(rng, 3, 2);
    const DataMatrix X = test_util::random_matrix(rng, 6, 3);
    const Vector y = test_util::random_vector(rng, 6);
    const auto cfg = cfg_with(0.6, 0.5, Activation::tanh);
    const Objective obj = Objective::expectile(cfg);
    Gradient g = risk_gradient(m, obj, X, y);
    g.d_w1(2, 1) += 1.0;
    const auto report = check_gradient_against(g, m, obj, X, y, 1e-6, 1e-6);
    ASSERT_EQ(report.flagged.size(), 1u);
    EXPECT_EQ(report.flagged[0].block, ParamBlock::w1);
    EXPECT_EQ(report.flagged[0].row, 2);
    EXPECT_EQ(report.flagged[0].col, 1);
}

TEST(CheckGradient, SingleLinearSample)
{
    ModelParams m(1, 1);
    m.w1(0, 0) = 0.7;
    m.b1[0] = 0.2;
    m.w2[0] = -1.3;
    m.b2 = 0.4;
    DataMatrix X(1, 1);
    X(0, 0) = 1.5;
    Vector y(1);
    y[0] = 2.0;
    const auto cfg = cfg_with(0.25, 0.0, Activation::identity);
    const auto g = risk_gradient(m, cfg, X, y);
    // Hand derivation: f = w2 (w1 x + b1) + b2, residual y - f > 0 so weight tau.
    const double f = -1.3 * (0.7 * 1.5 + 0.2) + 0.4;
    const double dl = 2.0 * 0.25 * (f - 2.0);
    EXPECT_NEAR(g.d_b2, dl, 1e-12);
    EXPECT_NEAR(g.d_w2[0], dl * (0.7 * 1.5 + 0.2), 1e-12);
    EXPECT_NEAR(g.d_b1[0], dl * -1.3, 1e-12);
    EXPECT_NEAR(g.d_w1(0, 0), dl * -1.3 * 1.5, 1e-12);
    const auto report = check_gradient(m, cfg, X, y, 1e-5, 1e-8);
    EXPECT_TRUE(report.passed()) << report.max_rel();
}

TEST(CheckGradient, DoesNotModifyInputs)
{
    std::mt19937_64 rng(111);
    const auto m = test_util::random_params(rng, 2, 2);
    const auto copy = m;
    const DataMatrix X = test_util::random_matrix(rng, 3, 2);
    (void)check_gradient(m, cfg_with(0.5, 0.0, Activation::sigmoid), X, Vector::Ones(3), 1e-6,
                         1e-6);
    EXPECT_TRUE(m == copy);
}

TEST(SmoothSamples, DropsResidualKink)
{
    ModelParams m(1, 1);
    m.b2 = 1.0;
    DataMatrix X = DataMatrix::Zero(3, 1);
    Vector y(3);
    y << 1.0, 1.0 + 1e-9, 3.0;
    const auto keep = smooth_sample_indices(m, Objective::expectile(cfg_with(0.5, 0.0)), X, y,
                                            1e-4);
    // every hidden pre-activation is exactly 0 under relu, so nothing survives
    EXPECT_TRUE(keep.empty());
    const auto keep_id = smooth_sample_indices(
        m, Objective::expectile(cfg_with(0.5, 0.0, Activation::identity)), X, y, 1e-4);
    EXPECT_EQ(keep_id, std::vector<Eigen::Index>{2});
}
