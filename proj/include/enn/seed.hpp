#pragma once

#include <cstdint>
#include <initializer_list>

namespace enn {

/// SplitMix64 finalizer; a bijection on 64-bit words with good avalanche.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/// Child seed for a labelled sub-stream, e.g. derive_seed(master, {replicate, purpose}).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master,
                                                  std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t v : path) {
        s = splitmix64(s ^ splitmix64(v + 0x632be59bd9b4e019ULL));
    }
    return s;
}

/// Stream labels used with derive_seed.
namespace stream {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t source_init = 3;
inline constexpr std::uint64_t genotype = 4;
inline constexpr std::uint64_t structure = 5;
inline constexpr std::uint64_t source_noise = 6;
inline constexpr std::uint64_t target_noise = 7;
} // namespace stream

} // namespace enn
