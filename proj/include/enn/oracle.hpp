#pragma once

// Reference solvers for the convex special cases of expectile regression.
// They share nothing with the network code path except the data types, so
// they can serve as independent baselines in tests.

#include "enn/error.hpp"
#include "enn/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace enn::oracle {

inline constexpr double default_tolerance = 1e-10;
inline constexpr int default_max_iterations = 10000;

struct ScalarExpectile {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    double tolerance = default_tolerance;
};

struct LinearExpectile {
    double intercept = 0.0;
    Vector coefficients;
    int iterations = 0;
    bool converged = false;
    double tolerance = default_tolerance;
};

inline void check_tau(double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error(ErrorCategory::config, "tau must lie strictly inside (0,1)");
    }
}

/// Minimizer of sum_i L_tau(y_i, mu) by the asymmetric-mean fixed point
///   mu <- [tau S_above + (1-tau) S_below] / [tau n_above + (1-tau) n_below].
/// The iteration is a Newton step on a piecewise quadratic and stops once the
/// above/below partition settles.
[[nodiscard]] inline ScalarExpectile scalar_expectile_solve(const Vector& y, double tau,
                                                            double tol = default_tolerance,
                                                            int max_iter = default_max_iterations)
{
    check_tau(tau);
    if (y.size() == 0) {
        throw Error(ErrorCategory::empty_dataset, "expectile of an empty sample");
    }
    ScalarExpectile out;
    out.tolerance = tol;
    double mu = y.mean();
    for (int it = 1; it <= max_iter; ++it) {
        double num = 0.0;
        double den = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double w = y[i] >= mu ? tau : 1.0 - tau;
            num += w * y[i];
            den += w;
        }
        const double next = num / den;
        const double change = std::abs(next - mu);
        mu = next;
        out.iterations = it;
        if (change <= tol) {
            out.converged = true;
            break;
        }
    }
    out.value = mu;
    return out;
}

[[nodiscard]] inline double scalar_expectile(const Vector& y, double tau)
{
    return scalar_expectile_solve(y, tau).value;
}

/// Linear expectile regression with unpenalized intercept:
///   min (1/n) sum L_tau(y_i, b0 + x_i'b) + lambda |b|^2
/// solved by iteratively reweighted ridge least squares.
[[nodiscard]] inline LinearExpectile linear_expectile_fit(const DataMatrix& X, const Vector& y,
                                                          double tau, double lambda,
                                                          double tol = default_tolerance,
                                                          int max_iter = default_max_iterations)
{
    check_tau(tau);
    if (!(lambda >= 0.0)) {
        throw Error(ErrorCategory::config, "lambda must be >= 0");
    }
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n == 0) {
        throw Error(ErrorCategory::empty_dataset, "linear expectile fit needs samples");
    }
    require_dims("response length", n, y.size());

    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = X;

    if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < p + 1) {
            throw Error(ErrorCategory::data,
                        "design matrix with intercept is rank deficient; use lambda > 0");
        }
    }

    Eigen::MatrixXd ridge = Eigen::MatrixXd::Zero(p + 1, p + 1);
    ridge.diagonal().tail(p).setConstant(lambda);

    const auto nd = static_cast<double>(n);
    Vector beta = Vector::Zero(p + 1);
    Vector w = Vector::Constant(n, 0.5);
    LinearExpectile out;
    out.tolerance = tol;
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design / nd + ridge;
        const Vector rhs = design.transpose() * w.cwiseProduct(y) / nd;
        const Vector next = gram.ldlt().solve(rhs);
        const double change = (next - beta).lpNorm<Eigen::Infinity>();
        beta = next;
        out.iterations = it;
        const Vector residual = y - design * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            w[i] = residual[i] >= 0.0 ? tau : 1.0 - tau;
        }
        if (change <= tol && it > 1) {
            out.converged = true;
            break;
        }
    }
    out.intercept = beta[0];
    out.coefficients = beta.tail(p);
    return out;
}

/// Gradient of the linear objective at (intercept, coefficients), ordered
/// intercept first. Zero at the exact minimizer.
[[nodiscard]] inline Vector linear_expectile_gradient(const DataMatrix& X, const Vector& y,
                                                      double tau, double lambda, double intercept,
                                                      const Vector& coefficients)
{
    const Eigen::Index n = X.rows();
    const Vector fitted = (X * coefficients).array() + intercept;
    Vector weighted(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = y[i] - fitted[i];
        weighted[i] = (r >= 0.0 ? tau : 1.0 - tau) * r;
    }
    Vector g(X.cols() + 1);
    g[0] = -2.0 * weighted.sum() / static_cast<double>(n);
    g.tail(X.cols()) =
        -2.0 * X.transpose() * weighted / static_cast<double>(n) + 2.0 * lambda * coefficients;
    return g;
}

} // namespace enn::oracle
