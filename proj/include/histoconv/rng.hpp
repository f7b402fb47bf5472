#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace histoconv {

// Stream tags for derive_stream. Every source of randomness in training is a
// pure function of (master seed, tag, epoch[, item]); that is what makes
// epoch-boundary resume and worker-count independence exact.
enum class RngStream : std::uint64_t {
  init = 1,      // parameter initialization
  split = 2,     // stratified split shuffles
  shuffle = 3,   // per-epoch batch order
  augment = 4,   // per-item augmentation draws
  dropout = 5,   // per-epoch dropout masks
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = detail::splitmix64(base);
  for (auto w : words) h = detail::splitmix64(h ^ w);
  return h;
}

inline std::mt19937 derive_stream(std::uint64_t base, RngStream tag,
                                  std::uint64_t a = 0, std::uint64_t b = 0) {
  const std::uint64_t s = derive_seed(base, {static_cast<std::uint64_t>(tag), a, b});
  return std::mt19937(static_cast<std::uint32_t>(s ^ (s >> 32)));
}

}  // namespace histoconv
