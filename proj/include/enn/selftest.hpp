#pragma once

#include "enn/loss.hpp"

#include <algorithm>
#include <array>
#include <random>

namespace enn {

struct GradientSelfTest {
    int instances = 0;
    int skipped = 0;
    double max_rel_error = 0.0;
    int worst_instance = -1;
};

/// Random small networks (p, q <= 5, n <= 10, every hidden/output activation
/// pairing, lambda in {0, 1}) checked against central differences. Samples
/// within `margin` of a kink are removed first; an instance with no smooth
/// sample left is redrawn and counted in `skipped`.
[[nodiscard]] inline GradientSelfTest gradient_self_test(int instances, std::uint64_t seed,
                                                         double step = 1e-6, double margin = 1e-3)
{
    constexpr std::array hidden{Activation::identity, Activation::relu, Activation::sigmoid,
                                Activation::tanh};
    constexpr std::array output{Activation::identity, Activation::relu, Activation::sigmoid};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(1, 5), rows(1, 10);
    std::uniform_real_distribution<double> tau_d(0.05, 0.95);
    std::normal_distribution<double> normal(0.0, 1.0);

    GradientSelfTest out;
    while (out.instances < instances) {
        const int k = out.instances + out.skipped;
        Objective obj{expectile_weights(tau_d(rng)), (k % 2 == 0) ? 0.0 : 1.0,
                      hidden[static_cast<std::size_t>(k) % hidden.size()],
                      output[static_cast<std::size_t>(k / 4) % output.size()]};
        const int p = dim(rng), q = dim(rng), n = rows(rng);
        ModelParams m(p, q);
        for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = normal(rng);
        for (auto& v : m.b1) v = normal(rng);
        for (auto& v : m.w2) v = normal(rng);
        m.b2 = normal(rng);
        DataMatrix X(n, p);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
        Vector y(n);
        for (auto& v : y) v = 2.0 * normal(rng);

        const auto keep = smooth_sample_indices(m, obj, X, y, margin);
        if (keep.empty()) {
            ++out.skipped;
            continue;
        }
        DataMatrix Xs(static_cast<Eigen::Index>(keep.size()), p);
        Vector ys(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            Xs.row(static_cast<Eigen::Index>(i)) = X.row(keep[i]);
            ys[static_cast<Eigen::Index>(i)] = y[keep[i]];
        }
        const auto report = check_gradient_against(risk_gradient(m, obj, Xs, ys), m, obj, Xs, ys,
                                                    step, 1.0);
        if (report.max_rel() > out.max_rel_error) {
            out.max_rel_error = report.max_rel();
            out.worst_instance = out.instances;
        }
        ++out.instances;
    }
    return out;
}

} // namespace enn
