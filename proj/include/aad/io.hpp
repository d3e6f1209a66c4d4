#pragma once

#include "aad/types.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>

namespace aad {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : IoError {
  using IoError::IoError;
};
struct VersionError : IoError {
  using IoError::IoError;
};
struct TruncatedError : IoError {
  using IoError::IoError;
};
struct ManifestMismatchError : IoError {
  using IoError::IoError;
};

// "EAAD" container: magic 45 41 41 44, u32 version = 1, u64 header
// length, UTF-8 key=value header, then fixed-size epoch records with a
// float32 little-endian payload.
inline constexpr std::uint32_t kEaadVersion = 1;

/// Writes the set; returns the byte count. The set must have a
/// consistent manifest and validating epochs.
std::uint64_t write_epochset(const EpochSet& s, const std::filesystem::path& dest);

EpochSet read_epochset(const std::filesystem::path& source);

}  // namespace aad
