#pragma once

#include "enn/error.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace enn {

enum class Activation { identity, relu, sigmoid, tanh };

/// Derivative of relu at exactly zero. The subgradient choice is fixed so
/// that gradients are reproducible.
inline constexpr double relu_derivative_at_zero = 0.0;

[[nodiscard]] inline double activate(Activation a, double z) noexcept
{
    switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::tanh: return std::tanh(z);
    }
    return z;
}

/// Derivative expressed through the pre-activation `z` and the already
/// computed output `h = activate(a, z)`.
[[nodiscard]] inline double activate_derivative(Activation a, double z, double h) noexcept
{
    switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : relu_derivative_at_zero);
    case Activation::sigmoid: return h * (1.0 - h);
    case Activation::tanh: return 1.0 - h * h;
    }
    return 1.0;
}

[[nodiscard]] constexpr std::string_view to_string(Activation a) noexcept
{
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    }
    return "identity";
}

[[nodiscard]] inline Activation parse_activation(std::string_view name)
{
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    throw Error(ErrorCategory::config, "unknown activation '" + std::string(name) + "'");
}

/// The output layer admits identity, relu and sigmoid only.
[[nodiscard]] constexpr bool valid_output_activation(Activation a) noexcept
{
    return a != Activation::tanh;
}

} // namespace enn
