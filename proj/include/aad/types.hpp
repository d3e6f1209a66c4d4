#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace aad {

// Fixed geometry of a preprocessed epoch: 32 channels, 256 Hz,
// window [-0.2 s, 1.0 s) -> 307 samples.
inline constexpr int kChannels = 32;
inline constexpr int kEpochSamples = 307;
inline constexpr float kFsHz = 256.0f;
inline constexpr float kTMinS = -0.2f;
// Sample index of the word onset inside an epoch: round(0.2 * 256).
inline constexpr int kOnsetIndex = 51;

enum class Paradigm : std::uint8_t { P1 = 1, P2 = 2, P3 = 3 };
enum class Label : std::uint8_t { Unattended = 0, Attended = 1 };
enum class Origin : std::uint8_t {
  Experimental = 0,
  UpsampledAvg = 1,
  Simulated0dB = 2,
  Simulated3dB = 3,
  Simulated6dB = 4,
};

const char* to_string(Paradigm p);
const char* to_string(Label l);
const char* to_string(Origin o);

inline constexpr std::uint64_t kNoSource = ~std::uint64_t{0};

/// One labeled EEG segment, channels x samples in microvolts.
struct Epoch {
  std::uint64_t id = 0;
  int subject_id = 0;
  Paradigm paradigm = Paradigm::P1;
  int trial_id = 0;
  Label label = Label::Unattended;
  Origin origin = Origin::Experimental;
  float fs_hz = kFsHz;
  float t_min_s = kTMinS;
  // Ids of the experimental epochs this one was derived from
  // (averaging sources or the simulated-attended carrier). Unused
  // slots hold kNoSource; experimental epochs have none.
  std::array<std::uint64_t, 4> sources{kNoSource, kNoSource, kNoSource, kNoSource};
  Eigen::MatrixXf data;  // kChannels x kEpochSamples

  int channels() const { return static_cast<int>(data.rows()); }
  int samples() const { return static_cast<int>(data.cols()); }
};

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate_epoch(const Epoch& e);

// (subject, paradigm, label, origin) -> count
using ManifestKey = std::tuple<int, Paradigm, Label, Origin>;
using Manifest = std::map<ManifestKey, std::uint64_t>;

/// Ordered epoch collection plus a count manifest.
struct EpochSet {
  std::vector<Epoch> epochs;
  Manifest manifest;

  std::size_t size() const { return epochs.size(); }
  bool empty() const { return epochs.empty(); }

  void push(Epoch e);
  void append(const EpochSet& other);
  Manifest recount() const;
  bool manifest_consistent() const { return manifest == recount(); }
};

struct CountTable {
  std::map<int, std::uint64_t> per_subject;
  std::uint64_t total = 0;
};

/// Counts epochs matching the given filters (empty optional = any).
CountTable class_counts(const EpochSet& s,
                        std::optional<Paradigm> paradigm = {},
                        std::optional<Label> label = {},
                        std::optional<Origin> origin = {});

}  // namespace aad
