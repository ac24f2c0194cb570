#pragma once

#include <cstdint>
#include <string_view>

namespace ndiff {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t hash_label(std::string_view s) noexcept;

/// Stream key for one benchmark cell replicate. Every draw in a cell comes
/// from streams derived from this key, so results do not depend on the order
/// in which cells run.
std::uint64_t stream_key(std::uint64_t seed, std::string_view case_name, std::string_view method,
                         double axis_value, std::uint64_t replicate) noexcept;

/// Counter-based generator: draw i is a pure function of (key, i).
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t key) noexcept : key_(splitmix64(key)) {}

  /// Independent sub-stream, e.g. one for noise and one for outliers.
  KeyedStream substream(std::string_view label) const noexcept;

  std::uint64_t at(std::uint64_t counter) const noexcept;
  std::uint64_t next_u64() noexcept { return at(counter_++); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  double laplace(double b) noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ndiff
