#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace d2dcache {

/// SplitMix64 finalizer; used for seed derivation and counter-based draws.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a stream name.
constexpr std::uint64_t hash_name(std::string_view name) noexcept
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Maps 64 random bits to a double in [0, 1).
constexpr double bits_to_unit(std::uint64_t bits) noexcept
{
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/**
 * Seedable, splittable random stream.
 *
 * Every consumer derives its own child stream by name, so extra draws in one
 * module never shift the sequence seen by another. Draw methods are
 * implemented here rather than through <random> distributions so that
 * sequences are identical across standard library implementations.
 */
class RandomStream
{
public:
  explicit RandomStream(std::uint64_t seed) noexcept
    : seed_(seed), engine_(splitmix64(seed))
  {}

  /// Independent child stream; the parent is not advanced.
  [[nodiscard]] RandomStream split(std::string_view name) const noexcept
  {
    return RandomStream(splitmix64(seed_ ^ hash_name(name)));
  }

  [[nodiscard]] RandomStream split(std::uint64_t index) const noexcept
  {
    return RandomStream(splitmix64(seed_ + 0x632be59bd9b4e019ULL * (index + 1)));
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() noexcept { return bits_to_unit(engine_()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept
  {
    // Lemire-style rejection to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  double normal() noexcept
  {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Stateless standard normal draw keyed by (seed, a, b, c).
inline double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) noexcept
{
  std::uint64_t k = splitmix64(seed ^ splitmix64(a ^ splitmix64(b ^ splitmix64(c))));
  double u1 = bits_to_unit(k);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = bits_to_unit(splitmix64(k));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace d2dcache
