#pragma once

#include "aad/rng.hpp"
#include "aad/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace aad {

struct AugmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Subject- and paradigm-specific attended-class average waveform.
struct ErpTemplate {
  int subject_id = 0;
  Paradigm paradigm = Paradigm::P1;
  Eigen::MatrixXf waveform;  // kChannels x kEpochSamples
  double peak_latency_s = 0.0;
  bool degenerate = false;  // no usable GFP peak
};

struct AugmentedCorpus {
  EpochSet upsampled;
  EpochSet sim0;
  EpochSet sim3;
  EpochSet sim6;
  // (subject, paradigm) pairs skipped because of a degenerate template.
  std::vector<std::pair<int, Paradigm>> skipped;
};

/// Emits epochs until target_count is reached; each one averages
/// k ~ uniform{1..k_max} distinct source epochs of the same subject
/// and class (k = 1 duplicates). Source ids are recorded.
EpochSet upsample_by_averaging(const std::vector<const Epoch*>& cls, int k_max,
                               std::size_t target_count, RngStream& rng,
                               std::uint64_t id_base);

/// Sample-wise mean of the attended epochs; peak latency is the argmax
/// of global field power (cross-channel std per sample) in [0.2, 0.8] s.
ErpTemplate estimate_template(const std::vector<const Epoch*>& attended);

/// Width/latency variation parameters; drawn by draw_variation but kept
/// explicit so tests can pin them.
struct ErpVariation {
  double width_s = 0.45;   // target width, nominal segment width 0.45 s
  double latency_jitter_s = 0.0;
};

inline constexpr double kNominalErpWidthS = 0.45;

/// Width uniform in [0.3, 0.6] s; latency jitter uniform on
/// [-sqrt(3)*0.01, +sqrt(3)*0.01] s (standard deviation 10 ms).
ErpVariation draw_variation(RngStream& rng);

struct VariedWaveform {
  Eigen::MatrixXf waveform;  // kChannels x kEpochSamples
  bool clipped = false;
};

/// Extracts the nominal-width segment around the template peak,
/// linearly time-stretches it to v.width_s, shifts by the jitter and
/// zeroes outside the epoch.
VariedWaveform vary_erp(const ErpTemplate& t, const ErpVariation& v);

/// unattended.data + 10^(gain_db/20) * waveform, relabeled Attended.
Epoch simulate_attended(const Epoch& unattended, const Eigen::MatrixXf& waveform,
                        int gain_db, std::uint64_t new_id);

/// The full five-dataset assembly: per subject and paradigm, upsample
/// both classes to 2x|unattended|; per gain level, upsample unattended
/// to 4x|unattended| and convert a random half into simulated attended
/// epochs. Splitting into train/validation must happen before calling
/// this (provenance ids support the leakage audit).
AugmentedCorpus build_augmented_corpus(const EpochSet& original, RngStream& rng);

/// Experimental source-epoch ids reachable from e (e itself if it is
/// experimental).
std::vector<std::uint64_t> provenance_ids(const Epoch& e);

}  // namespace aad
