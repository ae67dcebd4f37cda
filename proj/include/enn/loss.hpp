#pragma once

#include "enn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace enn {

/// Weights of the asymmetric squared loss `w * (y - f)^2`: `below` applies
/// when the observation lies under the prediction (y < f), `above` otherwise.
struct ResidualWeights {
    double below = 0.5;
    double above = 0.5;
};

[[nodiscard]] inline ResidualWeights expectile_weights(double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error(ErrorCategory::config,
                    "tau must lie strictly inside (0,1), got " + std::to_string(tau));
    }
    return {1.0 - tau, tau};
}

/// Plain (symmetric) squared error, the loss of a classical regression network.
inline constexpr ResidualWeights squared_error_weights{1.0, 1.0};

namespace detail {

inline double weighted_loss(ResidualWeights w, double y, double f) noexcept
{
    const double r = y - f;
    return (y < f ? w.below : w.above) * (r * r);
}

inline double weighted_loss_derivative(ResidualWeights w, double y, double f) noexcept
{
    return (2.0 * (y < f ? w.below : w.above)) * (f - y);
}

} // namespace detail

/// Asymmetric squared loss L_tau(y, f).
[[nodiscard]] inline double loss_tau(double tau, double y, double f)
{
    return detail::weighted_loss(expectile_weights(tau), y, f);
}

/// dL_tau/df. Both branches vanish at y == f, so the loss is C^1.
[[nodiscard]] inline double loss_tau_derivative(double tau, double y, double f)
{
    return detail::weighted_loss_derivative(expectile_weights(tau), y, f);
}

struct RiskValue {
    double empirical = 0.0;
    double penalty = 0.0;
    double total = 0.0;
};

/// Gradient of the penalized risk, block for block shaped like ModelParams.
struct Gradient {
    Eigen::MatrixXd d_w1;
    Vector d_b1;
    Vector d_w2;
    double d_b2 = 0.0;

    Gradient() = default;
    explicit Gradient(const ModelParams& m)
        : d_w1(Eigen::MatrixXd::Zero(m.p(), m.q())), d_b1(Vector::Zero(m.q())),
          d_w2(Vector::Zero(m.q()))
    {}

    [[nodiscard]] double max_abs() const noexcept
    {
        double g = std::abs(d_b2);
        if (d_w1.size() > 0) g = std::max(g, d_w1.cwiseAbs().maxCoeff());
        if (d_b1.size() > 0) g = std::max(g, d_b1.cwiseAbs().maxCoeff());
        if (d_w2.size() > 0) g = std::max(g, d_w2.cwiseAbs().maxCoeff());
        return g;
    }
};

/// Loss and penalty description independent of EnnConfig, shared by the
/// expectile risk and the classical squared-error risk.
struct Objective {
    ResidualWeights weights;
    double lambda = 0.0;
    Activation hidden = Activation::relu;
    Activation output = Activation::identity;

    [[nodiscard]] static Objective expectile(const EnnConfig& cfg)
    {
        cfg.validate();
        return {expectile_weights(cfg.tau), cfg.lambda, cfg.hidden_activation,
                cfg.output_activation};
    }
};

namespace detail {

inline void check_data(const ModelParams& m, const DataMatrix& X, const Vector& y)
{
    if (X.rows() == 0) {
        throw Error(ErrorCategory::empty_dataset, "risk needs at least one sample");
    }
    require_dims("covariate matrix columns", m.p(), X.cols());
    require_dims("response length", X.rows(), y.size());
}

inline double ridge_sum(const ModelParams& m) noexcept
{
    return m.w1.squaredNorm() + m.w2.squaredNorm();
}

/// Penalized risk, plus its gradient when `grad` is non-null.
inline RiskValue evaluate(const ModelParams& m, const Objective& obj, const DataMatrix& X,
                          const Vector& y, Gradient* grad)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index nq = m.q();
    std::vector<double> z(static_cast<std::size_t>(nq));
    std::vector<double> h(static_cast<std::size_t>(nq));
    if (grad != nullptr) {
        *grad = Gradient(m);
    }

    double loss_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* x = X.row(i).data();
        const double s = output_preactivation(m, obj.hidden, x, [&](Eigen::Index q, double zq, double hq) {
            z[static_cast<std::size_t>(q)] = zq;
            h[static_cast<std::size_t>(q)] = hq;
        });
        const double f = activate(obj.output, s);
        loss_sum += weighted_loss(obj.weights, y[i], f);
        if (grad == nullptr) {
            continue;
        }
        const double g_s =
            weighted_loss_derivative(obj.weights, y[i], f) * activate_derivative(obj.output, s, f);
        grad->d_b2 += g_s;
        for (Eigen::Index q = 0; q < nq; ++q) {
            const auto k = static_cast<std::size_t>(q);
            grad->d_w2[q] += g_s * h[k];
            const double g_z = g_s * m.w2[q] * activate_derivative(obj.hidden, z[k], h[k]);
            if (g_z == 0.0) {
                continue;
            }
            grad->d_b1[q] += g_z;
            double* col = grad->d_w1.col(q).data();
            for (Eigen::Index j = 0; j < m.p(); ++j) {
                col[j] += g_z * x[j];
            }
        }
    }

    const auto nd = static_cast<double>(n);
    RiskValue r;
    r.empirical = loss_sum / nd;
    r.penalty = obj.lambda * ridge_sum(m);
    r.total = r.empirical + r.penalty;

    if (grad != nullptr) {
        const double two_lambda = 2.0 * obj.lambda;
        grad->d_w1 = grad->d_w1 / nd + two_lambda * m.w1;
        grad->d_b1 /= nd;
        grad->d_w2 = grad->d_w2 / nd + two_lambda * m.w2;
        grad->d_b2 /= nd;
    }
    return r;
}

} // namespace detail

/// Mean asymmetric loss plus the ridge penalty lambda * (|w1|^2 + |w2|^2).
/// Biases are not penalized.
[[nodiscard]] inline RiskValue risk(const ModelParams& params, const EnnConfig& cfg,
                                    const DataMatrix& X, const Vector& y)
{
    detail::check_data(params, X, y);
    return detail::evaluate(params, Objective::expectile(cfg), X, y, nullptr);
}

[[nodiscard]] inline RiskValue risk(const ModelParams& params, const Objective& obj,
                                    const DataMatrix& X, const Vector& y)
{
    detail::check_data(params, X, y);
    return detail::evaluate(params, obj, X, y, nullptr);
}

/// Backpropagated gradient of risk(...).total.
[[nodiscard]] inline Gradient risk_gradient(const ModelParams& params, const EnnConfig& cfg,
                                            const DataMatrix& X, const Vector& y)
{
    detail::check_data(params, X, y);
    Gradient g;
    detail::evaluate(params, Objective::expectile(cfg), X, y, &g);
    return g;
}

[[nodiscard]] inline Gradient risk_gradient(const ModelParams& params, const Objective& obj,
                                            const DataMatrix& X, const Vector& y)
{
    detail::check_data(params, X, y);
    Gradient g;
    detail::evaluate(params, obj, X, y, &g);
    return g;
}

// ---------------------------------------------------------------------------
// Finite-difference verification

enum class ParamBlock { w1, b1, w2, b2 };

[[nodiscard]] constexpr std::string_view to_string(ParamBlock b) noexcept
{
    switch (b) {
    case ParamBlock::w1: return "w1";
    case ParamBlock::b1: return "b1";
    case ParamBlock::w2: return "w2";
    case ParamBlock::b2: return "b2";
    }
    return "?";
}

struct GradientMismatch {
    ParamBlock block;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradientCheckReport {
    double max_rel_w1 = 0.0;
    double max_rel_b1 = 0.0;
    double max_rel_w2 = 0.0;
    double max_rel_b2 = 0.0;
    std::vector<GradientMismatch> flagged;

    [[nodiscard]] bool passed() const noexcept { return flagged.empty(); }
    [[nodiscard]] double max_rel() const noexcept
    {
        return std::max({max_rel_w1, max_rel_b1, max_rel_w2, max_rel_b2});
    }
};

/// Relative error with a floor on the denominator so that entries that are
/// zero analytically are judged on an absolute scale of 1e-3.
[[nodiscard]] inline double gradient_rel_error(double analytic, double numeric) noexcept
{
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    return std::abs(analytic - numeric) / denom;
}

/// Compares a supplied gradient against central differences of the risk.
/// Inputs are copied; nothing the caller owns is modified.
[[nodiscard]] inline GradientCheckReport check_gradient_against(const Gradient& analytic,
                                                                const ModelParams& params,
                                                                const Objective& obj,
                                                                const DataMatrix& X,
                                                                const Vector& y, double step,
                                                                double tol)
{
    if (!(step > 0.0)) {
        throw Error(ErrorCategory::config, "finite-difference step must be > 0");
    }
    detail::check_data(params, X, y);
    GradientCheckReport report;
    ModelParams probe = params;

    auto central = [&](double& slot) {
        const double saved = slot;
        slot = saved + step;
        const double up = detail::evaluate(probe, obj, X, y, nullptr).total;
        slot = saved - step;
        const double down = detail::evaluate(probe, obj, X, y, nullptr).total;
        slot = saved;
        return (up - down) / (2.0 * step);
    };
    auto record = [&](ParamBlock block, Eigen::Index r, Eigen::Index c, double a, double num,
                      double& block_max) {
        const double e = gradient_rel_error(a, num);
        block_max = std::max(block_max, e);
        if (!(e <= tol)) {
            report.flagged.push_back({block, r, c, a, num, e});
        }
    };

    for (Eigen::Index q = 0; q < params.q(); ++q) {
        for (Eigen::Index j = 0; j < params.p(); ++j) {
            record(ParamBlock::w1, j, q, analytic.d_w1(j, q), central(probe.w1(j, q)),
                   report.max_rel_w1);
        }
    }
    for (Eigen::Index q = 0; q < params.q(); ++q) {
        record(ParamBlock::b1, q, 0, analytic.d_b1[q], central(probe.b1[q]), report.max_rel_b1);
    }
    for (Eigen::Index q = 0; q < params.q(); ++q) {
        record(ParamBlock::w2, q, 0, analytic.d_w2[q], central(probe.w2[q]), report.max_rel_w2);
    }
    record(ParamBlock::b2, 0, 0, analytic.d_b2, central(probe.b2), report.max_rel_b2);
    return report;
}

[[nodiscard]] inline GradientCheckReport check_gradient(const ModelParams& params,
                                                        const EnnConfig& cfg, const DataMatrix& X,
                                                        const Vector& y, double step, double tol)
{
    const Objective obj = Objective::expectile(cfg);
    return check_gradient_against(risk_gradient(params, obj, X, y), params, obj, X, y, step, tol);
}

/// Indices of samples whose residual, output pre-activation or any hidden
/// pre-activation lies within `margin` of a kink of the loss or of relu.
/// Finite differences straddling a kink are not meaningful there.
[[nodiscard]] inline std::vector<Eigen::Index> smooth_sample_indices(const ModelParams& m,
                                                                     const Objective& obj,
                                                                     const DataMatrix& X,
                                                                     const Vector& y, double margin)
{
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        bool near_kink = false;
        const double s = detail::output_preactivation(
            m, obj.hidden, X.row(i).data(), [&](Eigen::Index, double z, double) {
                if (obj.hidden == Activation::relu && std::abs(z) < margin) near_kink = true;
            });
        if (obj.output == Activation::relu && std::abs(s) < margin) near_kink = true;
        if (std::abs(y[i] - activate(obj.output, s)) < margin) near_kink = true;
        if (!near_kink) keep.push_back(i);
    }
    return keep;
}

} // namespace enn
