#pragma once

#include "enn/activation.hpp"
#include "enn/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

namespace enn {

/// Sample-major data matrix: one row per individual, one column per covariate.
using DataMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Weights and biases of a single-hidden-layer expectile network.
///
/// `w1(p, q)` connects covariate p to hidden unit q; `w2(q)` connects hidden
/// unit q to the output. Covariates are not augmented with a constant column:
/// `b1` and `b2` carry the intercepts.
struct ModelParams {
    Eigen::MatrixXd w1;
    Vector b1;
    Vector w2;
    double b2 = 0.0;

    ModelParams() = default;

    ModelParams(Eigen::Index p, Eigen::Index q)
        : w1(Eigen::MatrixXd::Zero(p, q)), b1(Vector::Zero(q)), w2(Vector::Zero(q))
    {
        if (p < 1 || q < 1) {
            throw Error(ErrorCategory::config, "model needs p >= 1 and q >= 1");
        }
    }

    [[nodiscard]] Eigen::Index p() const noexcept { return w1.rows(); }
    [[nodiscard]] Eigen::Index q() const noexcept { return w1.cols(); }

    [[nodiscard]] bool all_finite() const noexcept
    {
        return w1.allFinite() && b1.allFinite() && w2.allFinite() && std::isfinite(b2);
    }

    /// Throws if the blocks disagree on p/q or hold non-finite values.
    void validate() const
    {
        if (p() < 1 || q() < 1) {
            throw Error(ErrorCategory::dimension, "model has an empty weight matrix");
        }
        require_dims("b1 length", q(), b1.size());
        require_dims("w2 length", q(), w2.size());
        if (!all_finite()) {
            throw Error(ErrorCategory::numerical, "model parameters contain NaN or Inf");
        }
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b)
    {
        return a.w1.rows() == b.w1.rows() && a.w1.cols() == b.w1.cols() && a.w1 == b.w1 &&
               a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
    }
};

struct EnnConfig {
    double tau = 0.5;
    double lambda = 0.0;
    int hidden_units = 5;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::identity;
    int max_epochs = 1000;
    double grad_tolerance = 1e-6;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw Error(ErrorCategory::config,
                        "tau must lie strictly inside (0,1), got " + std::to_string(tau));
        }
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw Error(ErrorCategory::config, "lambda must be finite and >= 0");
        }
        if (hidden_units < 1) {
            throw Error(ErrorCategory::config, "hidden_units must be >= 1");
        }
        if (!valid_output_activation(output_activation)) {
            throw Error(ErrorCategory::config, "output activation must be identity, relu or sigmoid");
        }
        if (max_epochs < 1) {
            throw Error(ErrorCategory::config, "max_epochs must be >= 1");
        }
        if (!(grad_tolerance > 0.0)) {
            throw Error(ErrorCategory::config, "grad_tolerance must be > 0");
        }
    }
};

[[nodiscard]] inline Eigen::Index param_count(const ModelParams& params) noexcept
{
    return params.p() * params.q() + 2 * params.q() + 1;
}

namespace detail {

/// Output pre-activation for one sample. Every prediction path in the
/// library funnels through this loop so batch and single-sample results
/// agree bit for bit.
template <typename HiddenSink>
double output_preactivation(const ModelParams& m, Activation hidden, const double* x,
                            HiddenSink&& sink)
{
    const Eigen::Index np = m.p();
    const Eigen::Index nq = m.q();
    double s = 0.0;
    for (Eigen::Index q = 0; q < nq; ++q) {
        double z = m.b1[q];
        const double* col = m.w1.col(q).data();
        for (Eigen::Index j = 0; j < np; ++j) {
            z += x[j] * col[j];
        }
        const double h = activate(hidden, z);
        sink(q, z, h);
        s += h * m.w2[q];
    }
    return s + m.b2;
}

inline double predict_row(const ModelParams& m, const EnnConfig& cfg, const double* x)
{
    const double s =
        output_preactivation(m, cfg.hidden_activation, x, [](Eigen::Index, double, double) {});
    return activate(cfg.output_activation, s);
}

} // namespace detail

/// Conditional tau-expectile prediction for a single covariate vector.
[[nodiscard]] inline double forward(const ModelParams& params, const EnnConfig& cfg,
                                    std::span<const double> x)
{
    require_dims("covariate vector length", params.p(), static_cast<long>(x.size()));
    return detail::predict_row(params, cfg, x.data());
}

[[nodiscard]] inline Vector forward_batch(const ModelParams& params, const EnnConfig& cfg,
                                          const DataMatrix& X)
{
    if (X.rows() > 0) {
        require_dims("covariate matrix columns", params.p(), X.cols());
    }
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out[i] = detail::predict_row(params, cfg, X.row(i).data());
    }
    return out;
}

} // namespace enn
