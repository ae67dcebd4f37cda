#pragma once

#include "enn/loss.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace enn {

/// Which parameter blocks stay fixed while training.
struct FreezeSpec {
    bool freeze_w1 = false;
    bool freeze_b1 = false;
    bool freeze_w2 = false;
    bool freeze_b2 = false;

    [[nodiscard]] static constexpr FreezeSpec none() noexcept { return {}; }
    [[nodiscard]] static constexpr FreezeSpec all() noexcept { return {true, true, true, true}; }
    /// Keep the input-to-hidden block, retrain the output layer.
    [[nodiscard]] static constexpr FreezeSpec input_layer() noexcept
    {
        return {true, true, false, false};
    }

    [[nodiscard]] constexpr bool any_trainable() const noexcept
    {
        return !(freeze_w1 && freeze_b1 && freeze_w2 && freeze_b2);
    }

    friend constexpr bool operator==(const FreezeSpec&, const FreezeSpec&) = default;
};

[[nodiscard]] inline FreezeSpec parse_freeze(std::string_view name)
{
    if (name == "w1b1") return FreezeSpec::input_layer();
    if (name == "none") return FreezeSpec::none();
    if (name == "all") return FreezeSpec::all();
    throw Error(ErrorCategory::config,
                "unknown freeze spec '" + std::string(name) + "' (expected w1b1, none or all)");
}

[[nodiscard]] inline std::string to_string(const FreezeSpec& f)
{
    if (f == FreezeSpec::input_layer()) return "w1b1";
    if (f == FreezeSpec::none()) return "none";
    if (f == FreezeSpec::all()) return "all";
    std::string s;
    if (f.freeze_w1) s += "w1";
    if (f.freeze_b1) s += "b1";
    if (f.freeze_w2) s += "w2";
    if (f.freeze_b2) s += "b2";
    return s;
}

enum class InitRule {
    /// Uniform on [-s, s], s = sqrt(6 / (fan_in + fan_out)) per layer.
    glorot_uniform,
};

/// Random weights, zero biases. Deterministic in `seed`.
[[nodiscard]] inline ModelParams init_params(Eigen::Index p, Eigen::Index q, std::uint64_t seed,
                                             InitRule rule = InitRule::glorot_uniform)
{
    ModelParams m(p, q);
    std::mt19937_64 rng(seed);
    auto fill = [&](auto& block, double fan_in, double fan_out) {
        double s = 0.0;
        switch (rule) {
        case InitRule::glorot_uniform: s = std::sqrt(6.0 / (fan_in + fan_out)); break;
        }
        std::uniform_real_distribution<double> u(-s, s);
        for (Eigen::Index k = 0; k < block.size(); ++k) {
            block.data()[k] = u(rng);
        }
    };
    fill(m.w1, static_cast<double>(p), static_cast<double>(q));
    fill(m.w2, static_cast<double>(q), 1.0);
    return m;
}

enum class Termination { grad_tol, max_epochs, line_search_failure };

[[nodiscard]] constexpr std::string_view to_string(Termination t) noexcept
{
    switch (t) {
    case Termination::grad_tol: return "grad_tol";
    case Termination::max_epochs: return "max_epochs";
    case Termination::line_search_failure: return "line_search_failure";
    }
    return "?";
}

struct OptimReport {
    int iterations = 0;
    RiskValue final_risk;
    double final_grad_norm = 0.0;
    bool converged = false;
    Termination termination = Termination::max_epochs;
    /// Total risk at the starting point followed by one entry per accepted step.
    std::vector<double> risk_trace;
};

struct OptimOptions {
    int max_epochs = 1000;
    double grad_tolerance = 1e-6;
    int history = 10;
    double armijo = 1e-4;
    double shrink = 0.5;
    int max_halvings = 50;
    /// Called with the (masked) gradient at every iterate, including the first.
    std::function<void(int, const Gradient&, const RiskValue&)> observer;

    [[nodiscard]] static OptimOptions from(const EnnConfig& cfg)
    {
        OptimOptions o;
        o.max_epochs = cfg.max_epochs;
        o.grad_tolerance = cfg.grad_tolerance;
        return o;
    }
};

struct FitResult {
    ModelParams params;
    OptimReport report;
};

namespace detail {

inline Vector pack(const ModelParams& m)
{
    const Eigen::Index nw1 = m.w1.size();
    const Eigen::Index nq = m.q();
    Vector v(nw1 + 2 * nq + 1);
    v.segment(0, nw1) = m.w1.reshaped();
    v.segment(nw1, nq) = m.b1;
    v.segment(nw1 + nq, nq) = m.w2;
    v[nw1 + 2 * nq] = m.b2;
    return v;
}

inline Vector pack(const Gradient& g)
{
    const Eigen::Index nw1 = g.d_w1.size();
    const Eigen::Index nq = g.d_b1.size();
    Vector v(nw1 + 2 * nq + 1);
    v.segment(0, nw1) = g.d_w1.reshaped();
    v.segment(nw1, nq) = g.d_b1;
    v.segment(nw1 + nq, nq) = g.d_w2;
    v[nw1 + 2 * nq] = g.d_b2;
    return v;
}

inline void unpack(const Vector& v, ModelParams& m)
{
    const Eigen::Index nw1 = m.w1.size();
    const Eigen::Index nq = m.q();
    m.w1.reshaped() = v.segment(0, nw1);
    m.b1 = v.segment(nw1, nq);
    m.w2 = v.segment(nw1 + nq, nq);
    m.b2 = v[nw1 + 2 * nq];
}

inline void zero_frozen(Gradient& g, const FreezeSpec& f)
{
    if (f.freeze_w1) g.d_w1.setZero();
    if (f.freeze_b1) g.d_b1.setZero();
    if (f.freeze_w2) g.d_w2.setZero();
    if (f.freeze_b2) g.d_b2 = 0.0;
}

inline void restore_frozen(ModelParams& m, const ModelParams& origin, const FreezeSpec& f)
{
    if (f.freeze_w1) m.w1 = origin.w1;
    if (f.freeze_b1) m.b1 = origin.b1;
    if (f.freeze_w2) m.w2 = origin.w2;
    if (f.freeze_b2) m.b2 = origin.b2;
}

[[noreturn]] inline void non_finite(int iteration, const char* what)
{
    throw Error(ErrorCategory::numerical, std::string("non-finite ") + what +
                                              " encountered at iteration " +
                                              std::to_string(iteration));
}

} // namespace detail

/// Limited-memory BFGS with Armijo backtracking on the penalized risk.
///
/// Gradient entries of frozen blocks are zeroed before every use, so the
/// search direction never moves them; the returned frozen blocks are copied
/// from `params0`. When the two-loop direction is not a descent direction, or
/// a step violates the curvature condition s'y > 0, the history is dropped and
/// the next step is steepest descent.
[[nodiscard]] inline FitResult minimize_masked(const ModelParams& params0, const Objective& obj,
                                               const OptimOptions& opt, const DataMatrix& X,
                                               const Vector& y, const FreezeSpec& freeze)
{
    params0.validate();
    detail::check_data(params0, X, y);
    if (opt.max_epochs < 1 || !(opt.grad_tolerance > 0.0) || opt.history < 1) {
        throw Error(ErrorCategory::config, "invalid optimizer options");
    }

    ModelParams current = params0;
    ModelParams trial = params0;
    Gradient grad;
    RiskValue value = detail::evaluate(current, obj, X, y, &grad);
    if (!std::isfinite(value.total)) detail::non_finite(0, "risk");
    detail::zero_frozen(grad, freeze);

    Vector x = detail::pack(current);
    Vector g = detail::pack(grad);
    if (!g.allFinite()) detail::non_finite(0, "gradient");

    struct Pair {
        Vector s;
        Vector yv;
        double rho;
    };
    std::deque<Pair> memory;
    std::vector<double> alpha_buf;

    OptimReport report;
    report.risk_trace.push_back(value.total);
    if (opt.observer) opt.observer(0, grad, value);

    auto direction = [&]() -> Vector {
        Vector d = -g;
        if (memory.empty()) return d;
        alpha_buf.assign(memory.size(), 0.0);
        for (std::size_t k = memory.size(); k-- > 0;) {
            alpha_buf[k] = memory[k].rho * memory[k].s.dot(d);
            d -= alpha_buf[k] * memory[k].yv;
        }
        const Pair& last = memory.back();
        d *= last.s.dot(last.yv) / last.yv.squaredNorm();
        for (std::size_t k = 0; k < memory.size(); ++k) {
            const double beta = memory[k].rho * memory[k].yv.dot(d);
            d += (alpha_buf[k] - beta) * memory[k].s;
        }
        return d;
    };

    // Backtracking from `step`; on success `trial`, `trial_value` and
    // `trial_grad` hold the accepted point.
    Gradient trial_grad;
    RiskValue trial_value;
    Vector x_new;
    auto line_search = [&](const Vector& d, double slope, double step) {
        for (int h = 0; h <= opt.max_halvings; ++h, step *= opt.shrink) {
            x_new = x + step * d;
            detail::unpack(x_new, trial);
            trial_value = detail::evaluate(trial, obj, X, y, &trial_grad);
            if (trial_value.total <= value.total + opt.armijo * step * slope) {
                return true;
            }
        }
        return false;
    };

    report.termination = Termination::max_epochs;
    int iter = 0;
    for (; iter < opt.max_epochs; ++iter) {
        const double gnorm = g.lpNorm<Eigen::Infinity>();
        if (gnorm <= opt.grad_tolerance) {
            report.termination = Termination::grad_tol;
            break;
        }

        Vector d = direction();
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            memory.clear();
            d = -g;
            slope = g.dot(d);
        }
        double step = memory.empty() ? 1.0 / d.norm() : 1.0;
        bool accepted = line_search(d, slope, step);
        if (!accepted && !memory.empty()) {
            memory.clear();
            d = -g;
            slope = g.dot(d);
            step = 1.0 / d.norm();
            accepted = line_search(d, slope, step);
        }
        if (!accepted) {
            report.termination = Termination::line_search_failure;
            break;
        }

        if (!std::isfinite(trial_value.total)) detail::non_finite(iter + 1, "risk");
        detail::zero_frozen(trial_grad, freeze);
        Vector g_new = detail::pack(trial_grad);
        if (!g_new.allFinite()) detail::non_finite(iter + 1, "gradient");

        Vector s = x_new - x;
        Vector yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0) {
            memory.push_back({std::move(s), std::move(yv), 1.0 / sy});
            if (static_cast<int>(memory.size()) > opt.history) memory.pop_front();
        } else {
            memory.clear();
        }

        x = x_new;
        g = std::move(g_new);
        std::swap(current, trial);
        std::swap(grad, trial_grad);
        value = trial_value;
        report.risk_trace.push_back(value.total);
        if (opt.observer) opt.observer(iter + 1, grad, value);
    }

    detail::restore_frozen(current, params0, freeze);
    report.iterations = iter;
    report.final_risk = value;
    report.final_grad_norm = g.lpNorm<Eigen::Infinity>();
    report.converged = report.termination == Termination::grad_tol;
    return {std::move(current), std::move(report)};
}

[[nodiscard]] inline FitResult minimize_masked(const ModelParams& params0, const EnnConfig& cfg,
                                               const DataMatrix& X, const Vector& y,
                                               const FreezeSpec& freeze)
{
    return minimize_masked(params0, Objective::expectile(cfg), OptimOptions::from(cfg), X, y,
                           freeze);
}

[[nodiscard]] inline FitResult minimize(const ModelParams& params0, const EnnConfig& cfg,
                                        const DataMatrix& X, const Vector& y)
{
    return minimize_masked(params0, cfg, X, y, FreezeSpec::none());
}

} // namespace enn
