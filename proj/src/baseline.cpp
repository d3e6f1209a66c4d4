#include "aad/baseline.hpp"

#include "aad/dsp.hpp"

#include <cmath>
#include <numeric>

namespace aad {
namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd ac = a.array() - a.mean();
  Eigen::VectorXd bc = b.array() - b.mean();
  double na = ac.norm(), nb = bc.norm();
  if (na == 0.0 || nb == 0.0)
    throw BaselineError("pearson: zero-variance input");
  return ac.dot(bc) / (na * nb);
}

Eigen::VectorXd znorm(const Eigen::VectorXf& v) {
  Eigen::VectorXd d = v.cast<double>();
  d.array() -= d.mean();
  double sd = std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
  if (sd > 0.0) d /= sd;
  return d;
}

// Lagged feature vector [eeg[c, t + tau]] flattened c-major.
void fill_features(const Eigen::MatrixXf& eeg, int t, Eigen::VectorXd& phi) {
  const int C = static_cast<int>(eeg.rows());
  for (int c = 0; c < C; ++c)
    for (int tau = 0; tau < kDecoderLags; ++tau)
      phi[c * kDecoderLags + tau] = static_cast<double>(eeg(c, t + tau));
}

}  // namespace

Eigen::VectorXf extract_envelope(const Eigen::VectorXf& signal, double fs_in) {
  if (fs_in < 128.0) throw BaselineError("extract_envelope: fs must be >= 128 Hz");
  int n_taps = 401;
  if (signal.size() <= 3 * n_taps)
    throw BaselineError("extract_envelope: signal too short");
  Eigen::VectorXf rect = signal.cwiseAbs();
  FirFilter lp = design_lowpass(8.0, fs_in, n_taps);
  Eigen::VectorXf smooth = filtfilt(rect, lp);
  auto fs_int = static_cast<int>(std::lround(fs_in));
  return resample_rational(smooth, 64, fs_int);
}

LinearDecoder train_decoder(const std::vector<EnvelopePair>& windows, double lambda) {
  if (lambda < 0.0) throw BaselineError("train_decoder: negative lambda");
  const int dim = kChannels * kDecoderLags;
  std::size_t n_samples = 0;
  for (const EnvelopePair& w : windows)
    n_samples += static_cast<std::size_t>(w.eeg.cols() - kDecoderLags + 1);
  if (n_samples < static_cast<std::size_t>(dim))
    throw BaselineError("train_decoder: not enough training samples");

  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd phi(dim);
  for (const EnvelopePair& w : windows) {
    Eigen::VectorXd env = znorm(w.attended_env);
    const int valid = static_cast<int>(w.eeg.cols()) - kDecoderLags + 1;
    for (int t = 0; t < valid; ++t) {
      fill_features(w.eeg, t, phi);
      R.selfadjointView<Eigen::Lower>().rankUpdate(phi);
      r += env[t] * phi;
    }
  }
  R = R.selfadjointView<Eigen::Lower>();

  double ridge = lambda * R.diagonal().mean();
  Eigen::MatrixXd A = R + ridge * Eigen::MatrixXd::Identity(dim, dim);
  if (lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
      throw BaselineError("train_decoder: singular system at lambda = 0");
  }
  Eigen::VectorXd w = A.ldlt().solve(r);

  LinearDecoder d;
  d.lambda = lambda;
  d.weights.resize(kChannels, kDecoderLags);
  for (int c = 0; c < kChannels; ++c)
    for (int tau = 0; tau < kDecoderLags; ++tau)
      d.weights(c, tau) = w[c * kDecoderLags + tau];
  return d;
}

Eigen::VectorXd reconstruct(const LinearDecoder& d, const Eigen::MatrixXf& eeg) {
  const int valid = static_cast<int>(eeg.cols()) - kDecoderLags + 1;
  if (valid < 2) throw BaselineError("reconstruct: window too short");
  Eigen::VectorXd out(valid);
  for (int t = 0; t < valid; ++t) {
    double acc = 0.0;
    for (int c = 0; c < kChannels; ++c)
      for (int tau = 0; tau < kDecoderLags; ++tau)
        acc += d.weights(c, tau) * static_cast<double>(eeg(c, t + tau));
    out[t] = acc;
  }
  return out;
}

WindowDecision classify_window(const LinearDecoder& d, const EnvelopePair& w) {
  Eigen::VectorXd rec = reconstruct(d, w.eeg);
  const int valid = static_cast<int>(rec.size());
  Eigen::VectorXd e1 = znorm(w.attended_env).head(valid);
  Eigen::VectorXd e2 = znorm(w.unattended_env).head(valid);
  WindowDecision dec{};
  dec.corr_attended = pearson(rec, e1);
  dec.corr_unattended = pearson(rec, e2);
  dec.tie = std::abs(dec.corr_attended - dec.corr_unattended) < 1e-12;
  dec.picked_attended = dec.tie || dec.corr_attended > dec.corr_unattended;
  return dec;
}

double baseline_accuracy(const LinearDecoder& d, const std::vector<EnvelopePair>& windows) {
  if (windows.empty()) throw BaselineError("baseline_accuracy: no windows");
  std::size_t hits = 0;
  for (const EnvelopePair& w : windows)
    if (classify_window(d, w).picked_attended) ++hits;
  return static_cast<double>(hits) / static_cast<double>(windows.size());
}

std::vector<EnvelopePair> synth_envelope_windows(const EnvelopeSynthConfig& cfg,
                                                 RngStream& rng) {
  const int T = kWindowSamples;
  const int L = kDecoderLags;

  // Fixed forward model for the whole set: smooth channel x lag kernel.
  RngStream grng = rng.derive("forward-model");
  Eigen::MatrixXd g(kChannels, L);
  for (int c = 0; c < kChannels; ++c) {
    double phase = grng.uniform(0.0, 2.0 * M_PI);
    double amp = 0.5 + grng.uniform();
    for (int tau = 0; tau < L; ++tau)
      g(c, tau) = amp * std::sin(M_PI * (tau + 1) / (L + 1) + phase * 0.1) +
                  0.1 * grng.normal();
  }

  // Band-limited positive envelope, offset so it stays nonnegative.
  auto smooth_env = [](RngStream& r, int n) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int k = 1; k <= 6; ++k) {
      double a = r.normal() / k;
      double ph = r.uniform(0.0, 2.0 * M_PI);
      for (int t = 0; t < n; ++t)
        e[t] += a * std::sin(2.0 * M_PI * k * t / n + ph);
    }
    double lo = e.minCoeff();
    return (e.array() - lo + 0.2).matrix().eval();
  };

  std::vector<EnvelopePair> out;
  out.reserve(static_cast<std::size_t>(cfg.n_windows));
  double noise_gain = std::pow(10.0, -cfg.snr_db / 20.0);
  for (int i = 0; i < cfg.n_windows; ++i) {
    RngStream w = rng.derive("window=" + std::to_string(i));
    RngStream e1 = w.derive("env-att");
    RngStream e2 = w.derive("env-unatt");
    Eigen::VectorXd env_ext = smooth_env(e1, T + L);
    Eigen::VectorXd env2 = smooth_env(e2, T);

    EnvelopePair pair;
    pair.attended_env = env_ext.tail(T).cast<float>();
    pair.unattended_env = env2.cast<float>();
    pair.eeg.resize(kChannels, T);

    Eigen::VectorXd env_c = env_ext.array() - env_ext.mean();
    RngStream nrng = w.derive("noise");
    double sig_rms = 0.0;
    Eigen::MatrixXd clean(kChannels, T);
    for (int c = 0; c < kChannels; ++c)
      for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int tau = 0; tau < L; ++tau) acc += g(c, tau) * env_c[L + t - tau];
        clean(c, t) = acc;
      }
    sig_rms = std::sqrt(clean.squaredNorm() / static_cast<double>(clean.size()));
    if (sig_rms == 0.0) sig_rms = 1.0;
    for (int c = 0; c < kChannels; ++c)
      for (int t = 0; t < T; ++t) {
        double v = cfg.pure_noise
                       ? nrng.normal()
                       : clean(c, t) + noise_gain * sig_rms * nrng.normal();
        pair.eeg(c, t) = static_cast<float>(v);
      }
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace aad
