#pragma once

#include "aad/rng.hpp"
#include "aad/types.hpp"
#include "aad/dsp.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace aad {

struct SynthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parametric attended-ERP deflection: a half-cycle sine of given
/// width centered at the peak latency, projected onto a unit-norm
/// channel topography.
struct ErpShape {
  double latency_s = 0.45;   // peak, relative to word onset
  double width_s = 0.45;     // duration of the half cycle
  double amplitude_uv = 5.0; // peak amplitude before topography
  Eigen::VectorXf topography; // length kChannels, unit norm

  bool valid() const;
};

struct NoiseModel {
  double alpha = 1.0;   // power ~ 1/f^alpha
  double rms_uv = 10.0; // per channel
  Eigen::MatrixXf mixing; // C x C, full rank; empty = identity

  static NoiseModel defaults();
};

/// Renders the shape into a C x T epoch-aligned matrix at fs.
/// channel c, sample t: topo[c] * A * sin(pi (t/fs - start)/width) on
/// [start, start+width), zero elsewhere; start = latency - width/2,
/// times measured from word onset (sample kOnsetIndex).
Eigen::MatrixXf gen_erp_waveform(const ErpShape& shape, double fs = kFsHz,
                                 int T = kEpochSamples);

/// Spatially mixed 1/f^alpha noise, per-channel rms close to the model
/// rms. Deterministic given the stream.
Eigen::MatrixXf gen_noise(const NoiseModel& model, RngStream& rng, int C, int N);

/// Smooth random unit-norm topography. A shared low-order component
/// (deterministic in the master stream) keeps subjects' topographies
/// overlapping, as scalp projections of a common source would.
Eigen::VectorXf random_smooth_topography(RngStream& rng, int C = kChannels);

struct SubjectSynthConfig {
  int n_attended = 60;
  int n_unattended = 260;
  double snr_db = 0.0;
  int epochs_per_trial = 16;  // trial blocks for trial-based splitting
  NoiseModel noise = NoiseModel::defaults();
};

/// One subject's epoch set for one paradigm: unattended = sliced
/// continuous noise, attended = noise + per-subject randomized ERP
/// scaled so that (ERP rms over support) / (noise rms) matches snr_db
/// in amplitude dB.
EpochSet synth_subject(int subject_id, Paradigm paradigm, const SubjectSynthConfig& cfg,
                       RngStream& rng, std::uint64_t id_base);

struct DatasetSynthConfig {
  int n_subjects = 24;
  double snr_db_p1 = 0.0;
  double snr_db_p2 = 0.0;
  double snr_db_p3 = 0.0;
  // Scales the published per-subject epoch counts (1.0 = paper scale).
  double count_scale = 1.0;
  // Trial block length; smaller blocks keep enough trials per subject
  // and paradigm for trial-based splitting at reduced count_scale.
  int epochs_per_trial = 16;
  NoiseModel noise = NoiseModel::defaults();
};

/// Union over subjects and paradigms P1 (60/260), P2 (74/400),
/// P3 (109/1172 with the 5-epoch attended deficit planted at full
/// 24-subject scale so totals equal 2611/28128).
EpochSet synth_dataset(const DatasetSynthConfig& cfg, std::uint64_t master_seed);

/// Continuous 1000 Hz surrogate recording with planted events, for
/// exercising the preprocessing chain.
ContinuousRecording synth_continuous_recording(int subject_id, Paradigm paradigm,
                                               int n_events, double snr_db,
                                               RngStream& rng);

}  // namespace aad
