#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aad {

/// Deterministic random stream addressed by (master_seed, path).
/// The path is a list of labels ("augment", "subject=3", ...); equal
/// paths give equal sequences, distinct paths give independent ones.
/// Internally a PCG32 whose state and increment are derived from a
/// hash of the path, so results do not depend on construction order.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::vector<std::string> path);

  /// Child stream with one more path component.
  RngStream derive(const std::string& label) const;

  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<std::string>& path() const { return path_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, one value cached).
  double normal();
  /// k distinct indices in [0, n), order as drawn.
  std::vector<std::size_t> choice(std::size_t n, std::size_t k);
  /// Fisher-Yates shuffle of indices 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t master_seed_;
  std::vector<std::string> path_;
  std::uint64_t state_;
  std::uint64_t inc_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace aad
