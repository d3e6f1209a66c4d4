#pragma once

#include "aad/rng.hpp"
#include "aad/types.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace aad {

struct BaselineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Envelope feature rate and the lag span of the decoder (0-250 ms at
// 64 Hz -> 17 lags). Analysis windows are 1.2 s -> 77 samples.
inline constexpr double kEnvFsHz = 64.0;
inline constexpr int kDecoderLags = 17;
inline constexpr int kWindowSamples = 77;

/// One analysis window: EEG (C x T at 64 Hz) plus the two competing
/// stream envelopes, all aligned.
struct EnvelopePair {
  Eigen::MatrixXf eeg;            // kChannels x kWindowSamples
  Eigen::VectorXf attended_env;   // kWindowSamples
  Eigen::VectorXf unattended_env; // kWindowSamples
};

/// Lagged linear stimulus-reconstruction decoder.
struct LinearDecoder {
  Eigen::MatrixXd weights;  // kChannels x kDecoderLags
  double lambda = 0.0;
};

/// |x| -> zero-phase 8 Hz low-pass -> resample to 64 Hz.
Eigen::VectorXf extract_envelope(const Eigen::VectorXf& signal, double fs_in);

/// Ridge regression on lagged EEG: solves
/// (R + lambda * mean(diag(R)) * I) w = r. lambda = 0 with a singular
/// system is reported as an error.
LinearDecoder train_decoder(const std::vector<EnvelopePair>& windows, double lambda);

/// e_hat(t) = sum_{c,tau} w[c,tau] * eeg[c, t + tau] over the valid
/// range t in [0, T - kDecoderLags].
Eigen::VectorXd reconstruct(const LinearDecoder& d, const Eigen::MatrixXf& eeg);

struct WindowDecision {
  bool picked_attended;  // stream 1 = attended_env
  double corr_attended;
  double corr_unattended;
  bool tie;
};

/// Picks the stream whose envelope correlates best with the
/// reconstruction; ties break toward stream 1 and are flagged.
WindowDecision classify_window(const LinearDecoder& d, const EnvelopePair& w);

/// Fraction of windows whose attended stream is picked.
double baseline_accuracy(const LinearDecoder& d, const std::vector<EnvelopePair>& windows);

struct EnvelopeSynthConfig {
  int n_windows = 200;
  double snr_db = 20.0;  // EEG projection vs additive noise, amplitude dB
  bool pure_noise = false;  // EEG carries no envelope at all
};

/// Envelope-driven surrogate windows: EEG is a known lagged projection
/// of the attended envelope plus noise; both envelopes are smooth
/// band-limited positive processes.
std::vector<EnvelopePair> synth_envelope_windows(const EnvelopeSynthConfig& cfg,
                                                 RngStream& rng);

}  // namespace aad
