#pragma once

#include "enn/report.hpp"
#include "enn/serialize.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace enn {

struct CurvePoint {
    int rank = 0;
    double tau = 0.5;
    double value = 0.0;
};

/// For each model (ordered by tau) the predictions on `X_subset` sorted
/// ascending and numbered from rank 1.
[[nodiscard]] inline std::vector<CurvePoint> export_expectile_curves(std::vector<SavedModel> models,
                                                                     const DataMatrix& X_subset)
{
    if (models.empty()) {
        throw Error(ErrorCategory::config, "expectile curves need at least one model");
    }
    std::stable_sort(models.begin(), models.end(), [](const SavedModel& a, const SavedModel& b) {
        return a.config.tau < b.config.tau;
    });
    std::vector<CurvePoint> out;
    out.reserve(models.size() * static_cast<std::size_t>(X_subset.rows()));
    for (const auto& m : models) {
        Vector pred = forward_batch(m.params, m.config, X_subset);
        std::sort(pred.begin(), pred.end());
        for (Eigen::Index i = 0; i < pred.size(); ++i) {
            out.push_back({static_cast<int>(i + 1), m.config.tau, pred[i]});
        }
    }
    return out;
}

[[nodiscard]] inline std::string curves_tsv(const std::vector<CurvePoint>& points)
{
    std::ostringstream out;
    out << "rank\ttau\tvalue\n";
    for (const auto& p : points) {
        out << p.rank << '\t' << format_g6(p.tau) << '\t' << format_g6(p.value) << '\n';
    }
    return out.str();
}

/// Share of ranks at which the curves are ordered by tau (non-decreasing in
/// tau at that rank). Curves must have equal length.
[[nodiscard]] inline double curve_ordering_fraction(const std::vector<CurvePoint>& points)
{
    std::vector<double> taus;
    for (const auto& p : points) {
        if (taus.empty() || taus.back() != p.tau) taus.push_back(p.tau);
    }
    if (taus.empty()) return 1.0;
    const std::size_t m = points.size() / taus.size();
    std::size_t ordered = 0;
    for (std::size_t r = 0; r < m; ++r) {
        bool ok = true;
        for (std::size_t t = 1; t < taus.size(); ++t) {
            if (points[t * m + r].value < points[(t - 1) * m + r].value) ok = false;
        }
        if (ok) ++ordered;
    }
    return m == 0 ? 1.0 : static_cast<double>(ordered) / static_cast<double>(m);
}

} // namespace enn
