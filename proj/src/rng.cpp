#include "ndiff/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace ndiff {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view case_name, std::string_view method,
                         double axis_value, std::uint64_t replicate) noexcept {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ hash_label(case_name));
  k = splitmix64(k ^ hash_label(method));
  k = splitmix64(k ^ std::bit_cast<std::uint64_t>(axis_value));
  k = splitmix64(k ^ replicate);
  return k;
}

KeyedStream KeyedStream::substream(std::string_view label) const noexcept {
  return KeyedStream(key_ ^ hash_label(label));
}

std::uint64_t KeyedStream::at(std::uint64_t counter) const noexcept {
  return splitmix64(key_ + counter * 0xD1B54A32D192ED03ULL);
}

double KeyedStream::uniform() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

double KeyedStream::normal() noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double KeyedStream::laplace(double b) noexcept {
  const double u = uniform() - 0.5;  // [-0.5, 0.5)
  const double a = 1.0 - 2.0 * std::fabs(u);
  if (a <= 0.0) return 0.0;
  return -b * std::copysign(1.0, u) * std::log(a);
}

std::uint64_t KeyedStream::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
  std::uint64_t x;
  do x = next_u64();
  while (x >= limit);
  return x % n;
}

}  // namespace ndiff
