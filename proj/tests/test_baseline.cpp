#include "aad/baseline.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace aad;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("envelope of a steady tone is flat, of an AM tone follows the modulator") {
  const double fs = 256.0;
  const int n = 20000;
  Eigen::VectorXf tone(n);
  for (int i = 0; i < n; ++i)
    tone[i] = static_cast<float>(std::sin(2.0 * kPi * 40.0 * i / fs));
  Eigen::VectorXf env = extract_envelope(tone, fs);
  REQUIRE(env.size() > 100);
  // interior: constant up to ripple
  int skip = static_cast<int>(env.size() / 5);
  auto mid = env.segment(skip, env.size() - 2 * skip);
  double mean = mid.mean();
  double sd = std::sqrt((mid.array() - mean).square().mean());
  CHECK(sd / mean < 0.05);

  // 2 Hz amplitude modulation
  Eigen::VectorXf am(n);
  for (int i = 0; i < n; ++i) {
    double mod = 1.0 + 0.8 * std::sin(2.0 * kPi * 2.0 * i / fs);
    am[i] = static_cast<float>(mod * std::sin(2.0 * kPi * 40.0 * i / fs));
  }
  Eigen::VectorXf env2 = extract_envelope(am, fs);
  int skip2 = static_cast<int>(env2.size() / 5);
  double num = 0, den1 = 0, den2 = 0;
  double m_env = env2.segment(skip2, env2.size() - 2 * skip2).mean();
  for (int i = skip2; i < env2.size() - skip2; ++i) {
    double mod = 1.0 + 0.8 * std::sin(2.0 * kPi * 2.0 * (i * fs / kEnvFsHz) / fs);
    double a = env2[i] - m_env;
    double b = mod - 1.0;
    num += a * b;
    den1 += a * a;
    den2 += b * b;
  }
  CHECK(num / std::sqrt(den1 * den2) > 0.95);

  // zero in, zero out
  Eigen::VectorXf z = Eigen::VectorXf::Zero(n);
  CHECK(extract_envelope(z, fs).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("decoder recovers a planted projection at 20 dB") {
  EnvelopeSynthConfig cfg;
  cfg.n_windows = 300;
  cfg.snr_db = 20.0;
  RngStream rng(7, {"baseline", "planted"});
  auto windows = synth_envelope_windows(cfg, rng);
  REQUIRE(windows.size() == 300);

  std::vector<EnvelopePair> train_set(windows.begin(), windows.begin() + 200);
  std::vector<EnvelopePair> test_set(windows.begin() + 200, windows.end());
  LinearDecoder dec = train_decoder(train_set, 1e-2);

  // held-out reconstruction correlation with the attended envelope
  double corr_sum = 0;
  for (const EnvelopePair& w : test_set) {
    Eigen::VectorXd e = reconstruct(dec, w.eeg);
    Eigen::VectorXd env =
        w.attended_env.segment(0, e.size()).cast<double>();
    Eigen::VectorXd ec = e.array() - e.mean();
    Eigen::VectorXd vc = env.array() - env.mean();
    corr_sum += ec.dot(vc) / std::sqrt(ec.squaredNorm() * vc.squaredNorm());
  }
  CHECK(corr_sum / static_cast<double>(test_set.size()) >= 0.9);

  CHECK(baseline_accuracy(dec, test_set) >= 0.9);
}

TEST_CASE("ridge shrinkage drives weights toward zero") {
  EnvelopeSynthConfig cfg;
  cfg.n_windows = 100;
  RngStream rng(8, {"baseline", "ridge"});
  auto windows = synth_envelope_windows(cfg, rng);

  double prev = 1e300;
  for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
    LinearDecoder d = train_decoder(windows, lambda);
    double norm = d.weights.norm();
    CHECK(norm <= prev + 1e-9);
    prev = norm;
  }
}

TEST_CASE("duplicated training windows leave the decoder unchanged") {
  EnvelopeSynthConfig cfg;
  cfg.n_windows = 60;
  RngStream rng(9, {"baseline", "dup"});
  auto windows = synth_envelope_windows(cfg, rng);
  LinearDecoder a = train_decoder(windows, 1e-2);

  auto doubled = windows;
  doubled.insert(doubled.end(), windows.begin(), windows.end());
  LinearDecoder b = train_decoder(doubled, 1e-2);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("decoder training is affine-equivariant in the EEG scale") {
  EnvelopeSynthConfig cfg;
  cfg.n_windows = 80;
  RngStream rng(10, {"baseline", "scale"});
  auto windows = synth_envelope_windows(cfg, rng);
  LinearDecoder a = train_decoder(windows, 1e-2);

  auto scaled = windows;
  for (auto& w : scaled) w.eeg *= 4.0f;
  LinearDecoder b = train_decoder(scaled, 1e-2);
  CHECK((a.weights - 4.0 * b.weights).cwiseAbs().maxCoeff() <=
        1e-6 * a.weights.cwiseAbs().maxCoeff());

  // decisions unchanged
  for (std::size_t i = 0; i < 20; ++i) {
    WindowDecision da = classify_window(a, windows[i]);
    WindowDecision db = classify_window(b, scaled[i]);
    CHECK(da.picked_attended == db.picked_attended);
  }
}

TEST_CASE("classification picks the attended stream when reconstruction is exact") {
  // decoder that reads channel 0 at lag 0; eeg row 0 = attended env
  LinearDecoder d;
  d.weights = Eigen::MatrixXd::Zero(kChannels, kDecoderLags);
  d.weights(0, 0) = 1.0;

  RngStream rng(11, {"baseline", "exact"});
  EnvelopePair w;
  w.eeg = Eigen::MatrixXf::Zero(kChannels, kWindowSamples);
  w.attended_env = Eigen::VectorXf(kWindowSamples);
  w.unattended_env = Eigen::VectorXf(kWindowSamples);
  for (int t = 0; t < kWindowSamples; ++t) {
    w.attended_env[t] = static_cast<float>(2.0 + std::sin(0.3 * t));
    w.unattended_env[t] = static_cast<float>(2.0 + std::cos(0.41 * t + 1.0));
  }
  w.eeg.row(0) = w.attended_env.transpose();

  WindowDecision dec = classify_window(d, w);
  CHECK(dec.picked_attended);
  CHECK(dec.corr_attended == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(dec.tie);
}

TEST_CASE("pure-noise windows classify at chance") {
  EnvelopeSynthConfig train_cfg;
  train_cfg.n_windows = 100;
  RngStream rng(12, {"baseline", "chance-train"});
  auto train_windows = synth_envelope_windows(train_cfg, rng);
  LinearDecoder dec = train_decoder(train_windows, 1e-2);

  EnvelopeSynthConfig noise_cfg;
  noise_cfg.n_windows = 10000;
  noise_cfg.pure_noise = true;
  RngStream rng2(13, {"baseline", "chance"});
  auto noise_windows = synth_envelope_windows(noise_cfg, rng2);
  double acc = baseline_accuracy(dec, noise_windows);
  CHECK(acc >= 0.48);
  CHECK(acc <= 0.52);
}
