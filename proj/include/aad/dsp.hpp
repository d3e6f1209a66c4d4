#pragma once

#include "aad/types.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace aad {

struct DspError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Continuous multichannel recording with word-onset events, prior to
/// (or after) preprocessing.
struct RecordingEvent {
  std::int64_t sample_index = 0;  // middle of the word
  Label label = Label::Unattended;
  int trial_id = 0;
};

struct ContinuousRecording {
  int subject_id = 0;
  Paradigm paradigm = Paradigm::P1;
  float fs_hz = 1000.0f;
  Eigen::MatrixXf data;  // kChannels x N
  std::vector<RecordingEvent> events;
};

/// Linear-phase FIR filter, taps stored in double for design accuracy.
struct FirFilter {
  Eigen::VectorXd taps;  // odd length, symmetric
  double lo_hz = 0.0;    // 0 for a low-pass design
  double hi_hz = 0.0;
  double fs_hz = 0.0;

  int order() const { return static_cast<int>(taps.size()); }
  /// Magnitude of the transfer function at f (Hz), single pass.
  double gain_at(double f_hz) const;
};

/// Windowed-sinc (Hamming) band-pass. Each constituent low-pass is
/// normalized to exact unit DC gain, so the band-pass has zero DC gain.
FirFilter design_bandpass(double lo_hz, double hi_hz, double fs_hz, int n_taps);

/// Windowed-sinc (Hamming) low-pass with unit DC gain.
FirFilter design_lowpass(double cutoff_hz, double fs_hz, int n_taps);

/// Forward-backward (zero-phase) filtering with reflection padding of
/// length taps-1 at both ends. Output length equals input length.
Eigen::VectorXf filtfilt(const Eigen::VectorXf& x, const FirFilter& f);

/// filtfilt applied to every row of a channels x samples matrix.
Eigen::MatrixXf filtfilt_rows(const Eigen::MatrixXf& x, const FirFilter& f);

/// Polyphase rational resampling by up/down with a Hamming anti-alias
/// low-pass. Output length = floor(N * up / down).
Eigen::VectorXf resample_rational(const Eigen::VectorXf& x, int up, int down);

/// 1000 Hz -> 256 Hz (up 32, down 125).
Eigen::VectorXf resample_1000_to_256(const Eigen::VectorXf& x);
Eigen::MatrixXf resample_rows(const Eigen::MatrixXf& x, int up, int down);

struct EpochExtraction {
  EpochSet epochs;
  std::vector<std::size_t> skipped_events;  // indices into r.events
};

/// Cuts [-0.2 s, 1.0 s) epochs around each event of a 256 Hz recording.
/// Events too close to an edge are skipped and reported. Epoch ids are
/// id_base + running index over emitted epochs.
EpochExtraction extract_epochs(const ContinuousRecording& r, std::uint64_t id_base = 0,
                               bool baseline_correct = false);

struct RejectionResult {
  EpochSet kept;
  std::size_t rejected = 0;
};

/// Drops epochs whose worst-channel peak-to-peak amplitude exceeds the
/// threshold (200 uV by default).
RejectionResult peak_to_peak_reject(const EpochSet& s, float threshold_uv = 200.0f);

struct PreprocessResult {
  EpochSet epochs;
  std::size_t skipped = 0;
  std::size_t rejected = 0;
};

/// Full chain of the preprocessing pipeline on a 1000 Hz recording:
/// band-pass 0.5-40 Hz (zero phase), resample to 256 Hz, epoch, reject.
PreprocessResult preprocess_recording(const ContinuousRecording& r,
                                      std::uint64_t id_base = 0,
                                      int bandpass_taps = 3301,
                                      float reject_uv = 200.0f);

}  // namespace aad
