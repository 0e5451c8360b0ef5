#pragma once

#include <cstdint>
#include <string_view>

namespace phyre {

/// 64-bit FNV-1a, used to turn string identifiers into RNG keys.
std::uint64_t fnv1a(std::string_view text);

/// Mixes two words into one key; order matters.
std::uint64_t mix_key(std::uint64_t a, std::uint64_t b);

/// Counter-based generator: the n-th draw is a pure function of (key, n), so a stream
/// never depends on how many other streams were consumed before it.
class KeyedRng
{
public:
  explicit KeyedRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Stateless draw used by KeyedRng.
std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter);

} // namespace phyre
