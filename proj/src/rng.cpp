#include "aad/rng.hpp"

#include <cmath>

namespace aad {
namespace {

constexpr std::uint64_t kPcgMult = 6364136223846793005ULL;

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Separator so {"ab"} and {"a","b"} hash differently.
  h ^= 0x1f;
  h *= 0x100000001b3ULL;
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::vector<std::string> path)
    : master_seed_(master_seed), path_(std::move(path)) {
  if (path_.empty()) throw std::invalid_argument("RngStream: empty path");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::string& label : path_) h = fnv1a(h, label);
  std::uint64_t mix = master_seed_ ^ h;
  state_ = splitmix64(mix);
  inc_ = splitmix64(mix) | 1ULL;
  // PCG init: advance once past the seed state.
  state_ = state_ * kPcgMult + inc_;
}

RngStream RngStream::derive(const std::string& label) const {
  std::vector<std::string> p = path_;
  p.push_back(label);
  return RngStream(master_seed_, std::move(p));
}

std::uint32_t RngStream::next_u32() {
  std::uint64_t old = state_;
  state_ = old * kPcgMult + inc_;
  auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double RngStream::uniform() {
  // 53 random bits into [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::vector<std::size_t> RngStream::choice(std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("RngStream::choice: k > n");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: first k entries are the draw.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform() * static_cast<double>(n - i));
    if (j >= n) j = n - 1;
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) { return choice(n, n); }

}  // namespace aad
