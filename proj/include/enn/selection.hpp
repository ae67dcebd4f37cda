#pragma once

#include "enn/optimizer.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

namespace enn {

/// Mean squared error (1/n) sum (y_i - yhat_i)^2.
[[nodiscard]] inline double mse(const Vector& y_true, const Vector& y_pred)
{
    require_dims("prediction length", y_true.size(), y_pred.size());
    if (y_true.size() == 0) {
        throw Error(ErrorCategory::empty_dataset, "mse of an empty vector");
    }
    return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

/// Validation scores within this relative distance count as ties. Fits that
/// collapse to the same constant predictor differ only at optimizer precision.
inline constexpr double selection_tie_tolerance = 1e-6;

struct GridPoint {
    double lambda = 0.0;
    int hidden = 3;
};

struct Selection {
    GridPoint point;
    double valid_mse = std::numeric_limits<double>::infinity();
    FitResult fit;
    /// Validation MSE for every grid point in evaluation order.
    std::vector<std::pair<GridPoint, double>> scores;
};

/// Evaluation order for grid search: larger lambda first, then fewer hidden
/// units. Near ties on validation MSE resolve toward the earlier, simpler
/// model.
[[nodiscard]] inline std::vector<GridPoint> ordered_grid(std::vector<double> lambdas,
                                                         std::vector<int> hidden)
{
    if (lambdas.empty() || hidden.empty()) {
        throw Error(ErrorCategory::config, "hyperparameter grids must be non-empty");
    }
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    std::sort(hidden.begin(), hidden.end());
    hidden.erase(std::unique(hidden.begin(), hidden.end()), hidden.end());
    std::vector<GridPoint> grid;
    for (double l : lambdas) {
        for (int h : hidden) grid.push_back({l, h});
    }
    return grid;
}

/// Fits every grid point with `fit` on the training rows and keeps the one
/// with the smallest validation MSE. A later grid point replaces the current
/// best only if it improves by more than selection_tie_tolerance.
template <typename FitFn>
[[nodiscard]] Selection select_on_validation(const std::vector<GridPoint>& grid,
                                             const EnnConfig& base, FitFn&& fit,
                                             const DataMatrix& X_valid, const Vector& y_valid)
{
    Selection best;
    for (const GridPoint& gp : grid) {
        EnnConfig cfg = base;
        cfg.lambda = gp.lambda;
        cfg.hidden_units = gp.hidden;
        FitResult r = fit(cfg);
        const double score = mse(y_valid, forward_batch(r.params, cfg, X_valid));
        best.scores.emplace_back(gp, score);
        if (best.scores.size() == 1 ||
            score < best.valid_mse * (1.0 - selection_tie_tolerance)) {
            best.valid_mse = score;
            best.point = gp;
            best.fit = std::move(r);
        }
    }
    return best;
}

/// Grid search for a network trained from scratch with initialization seed
/// `base.seed`.
[[nodiscard]] inline Selection select_scratch(const std::vector<GridPoint>& grid,
                                              const EnnConfig& base, const DataMatrix& X_train,
                                              const Vector& y_train, const DataMatrix& X_valid,
                                              const Vector& y_valid)
{
    return select_on_validation(
        grid, base,
        [&](const EnnConfig& cfg) {
            return minimize(init_params(X_train.cols(), cfg.hidden_units, cfg.seed), cfg, X_train,
                            y_train);
        },
        X_valid, y_valid);
}

} // namespace enn
