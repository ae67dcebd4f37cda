#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace enn {

/// Broad failure classes. The CLI prints the category name as the first
/// token of its error line so scripts can branch on it.
enum class ErrorCategory {
    config,
    dimension,
    empty_dataset,
    data,
    io,
    numerical,
};

constexpr std::string_view to_string(ErrorCategory c) noexcept
{
    switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::dimension: return "dimension";
    case ErrorCategory::empty_dataset: return "empty_dataset";
    case ErrorCategory::data: return "data";
    case ErrorCategory::io: return "io";
    case ErrorCategory::numerical: return "numerical";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category)
    {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

  private:
    ErrorCategory category_;
};

inline void require_dims(std::string_view what, long expected, long actual)
{
    if (expected != actual) {
        throw Error(ErrorCategory::dimension,
                    std::string(what) + ": expected " + std::to_string(expected) + ", got " +
                        std::to_string(actual));
    }
}

} // namespace enn
