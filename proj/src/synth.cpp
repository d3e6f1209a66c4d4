#include "aad/synth.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace aad {
namespace {

// 1/f^alpha noise via spectral shaping of white noise, unit rms.
// Shaping runs on the next power-of-two length (fast FFT) and the
// output is truncated to N.
Eigen::VectorXf shaped_noise(double alpha, RngStream& rng, int N) {
  int M = 1;
  while (M < N) M <<= 1;
  std::vector<double> w(static_cast<std::size_t>(M));
  for (auto& v : w) v = rng.normal();
  if (alpha != 0.0) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, w);
    for (int k = 0; k < M; ++k) {
      int kf = std::min(k, M - k);  // symmetric so ifft stays real
      if (kf == 0) {
        spec[static_cast<std::size_t>(k)] = 0.0;
      } else {
        double f = static_cast<double>(kf) / M;
        spec[static_cast<std::size_t>(k)] *= std::pow(f, -alpha / 2.0);
      }
    }
    fft.inv(w, spec);
  }
  Eigen::Map<Eigen::VectorXd> wd(w.data(), N);
  double rms = std::sqrt(wd.squaredNorm() / N);
  if (rms == 0.0) rms = 1.0;
  return (wd / rms).cast<float>();
}

}  // namespace

bool ErpShape::valid() const {
  return width_s > 0 && latency_s + width_s / 2.0 <= 1.0 &&
         topography.size() > 0 &&
         std::abs(topography.norm() - 1.0f) < 1e-4f;
}

NoiseModel NoiseModel::defaults() {
  NoiseModel m;
  m.alpha = 1.0;
  m.rms_uv = 10.0;
  return m;
}

Eigen::MatrixXf gen_erp_waveform(const ErpShape& shape, double fs, int T) {
  if (!shape.valid()) throw SynthError("gen_erp_waveform: invalid shape");
  const int onset = static_cast<int>(std::lround(0.2 * fs));
  const double start = shape.latency_s - shape.width_s / 2.0;
  if ((start + shape.width_s) * fs + onset > T)
    throw SynthError("gen_erp_waveform: waveform extends past epoch end");
  const int C = static_cast<int>(shape.topography.size());
  Eigen::MatrixXf out = Eigen::MatrixXf::Zero(C, T);
  for (int t = 0; t < T; ++t) {
    double tau = (t - onset) / fs;
    if (tau < start || tau >= start + shape.width_s) continue;
    auto v = static_cast<float>(shape.amplitude_uv *
                                std::sin(M_PI * (tau - start) / shape.width_s));
    out.col(t) = shape.topography * v;
  }
  return out;
}

Eigen::MatrixXf gen_noise(const NoiseModel& model, RngStream& rng, int C, int N) {
  Eigen::MatrixXf out(C, N);
  for (int c = 0; c < C; ++c) {
    RngStream ch = rng.derive("ch=" + std::to_string(c));
    out.row(c) = shaped_noise(model.alpha, ch, N).transpose();
  }
  if (model.mixing.size() > 0) {
    if (model.mixing.rows() != C || model.mixing.cols() != C)
      throw SynthError("gen_noise: mixing matrix shape");
    // Row-normalized so per-channel rms is preserved.
    Eigen::MatrixXf m = model.mixing;
    for (int r = 0; r < C; ++r) m.row(r) /= m.row(r).norm();
    out = m * out;
  }
  return out * static_cast<float>(model.rms_uv);
}

Eigen::VectorXf random_smooth_topography(RngStream& rng, int C) {
  // Low-order cosine basis with decaying random coefficients, plus a
  // fixed broad component shared by all subjects.
  Eigen::VectorXf t = Eigen::VectorXf::Zero(C);
  for (int k = 0; k <= 4; ++k) {
    auto coef = static_cast<float>(rng.normal() / (1.0 + k));
    for (int c = 0; c < C; ++c)
      t[c] += coef * static_cast<float>(std::cos(M_PI * k * (c + 0.5) / C));
  }
  t /= t.norm();
  Eigen::VectorXf common(C);
  for (int c = 0; c < C; ++c)
    common[c] = static_cast<float>(std::cos(M_PI * (c + 0.5) / C) + 1.2);
  common /= common.norm();
  Eigen::VectorXf mix = 0.6f * common + 0.8f * t;
  return mix / mix.norm();
}

EpochSet synth_subject(int subject_id, Paradigm paradigm, const SubjectSynthConfig& cfg,
                       RngStream& rng, std::uint64_t id_base) {
  if (cfg.n_attended <= 0 || cfg.n_unattended <= 0)
    throw SynthError("synth_subject: counts must be positive");
  const int n = cfg.n_attended + cfg.n_unattended;

  RngStream shape_rng = rng.derive("erp-shape");
  ErpShape shape;
  shape.latency_s = shape_rng.uniform(0.35, 0.55);
  shape.width_s = shape_rng.uniform(0.3, 0.6);
  shape.topography = random_smooth_topography(shape_rng);
  // Amplitude from the target epoch-level SNR: ERP rms over support
  // across channels is A * sqrt(1/(2C)), noise rms is cfg.noise.rms_uv.
  double ratio = std::pow(10.0, cfg.snr_db / 20.0);
  shape.amplitude_uv = ratio * cfg.noise.rms_uv * std::sqrt(2.0 * kChannels);
  if (!shape.valid()) throw SynthError("synth_subject: infeasible ERP shape");
  Eigen::MatrixXf erp = gen_erp_waveform(shape);

  RngStream noise_rng = rng.derive("noise");
  Eigen::MatrixXf noise = gen_noise(cfg.noise, noise_rng, kChannels, n * kEpochSamples);

  // Attended epochs spread evenly through the session.
  std::vector<bool> attended(static_cast<std::size_t>(n), false);
  for (int j = 0; j < cfg.n_attended; ++j) {
    auto pos = static_cast<std::size_t>(
        static_cast<std::int64_t>(j) * n / cfg.n_attended);
    while (attended[pos]) pos = (pos + 1) % static_cast<std::size_t>(n);
    attended[pos] = true;
  }

  EpochSet out;
  for (int i = 0; i < n; ++i) {
    Epoch e;
    e.id = id_base + static_cast<std::uint64_t>(i);
    e.subject_id = subject_id;
    e.paradigm = paradigm;
    e.trial_id = i / cfg.epochs_per_trial;
    e.label = attended[static_cast<std::size_t>(i)] ? Label::Attended : Label::Unattended;
    e.data = noise.middleCols(static_cast<Eigen::Index>(i) * kEpochSamples, kEpochSamples);
    if (e.label == Label::Attended) e.data += erp;
    out.push(std::move(e));
  }
  return out;
}

EpochSet synth_dataset(const DatasetSynthConfig& cfg, std::uint64_t master_seed) {
  RngStream root(master_seed, {"synth"});

  auto scaled = [&](int n) {
    return std::max(1, static_cast<int>(std::lround(n * cfg.count_scale)));
  };

  // Attended-count deficit for P3 (published totals reflect rejection
  // losses): 5 subjects contribute 108 instead of 109 at full scale.
  std::vector<bool> deficit(static_cast<std::size_t>(cfg.n_subjects) + 1, false);
  if (cfg.n_subjects == 24 && cfg.count_scale == 1.0) {
    RngStream d = root.derive("p3-deficit");
    for (std::size_t idx : d.choice(24, 5)) deficit[idx + 1] = true;
  }

  EpochSet out;
  for (int s = 1; s <= cfg.n_subjects; ++s) {
    RngStream subj = root.derive("subject=" + std::to_string(s));
    for (Paradigm p : {Paradigm::P1, Paradigm::P2, Paradigm::P3}) {
      SubjectSynthConfig sc;
      sc.noise = cfg.noise;
      sc.epochs_per_trial = cfg.epochs_per_trial;
      switch (p) {
        case Paradigm::P1:
          sc.n_attended = scaled(60);
          sc.n_unattended = scaled(260);
          sc.snr_db = cfg.snr_db_p1;
          break;
        case Paradigm::P2:
          sc.n_attended = scaled(74);
          sc.n_unattended = scaled(400);
          sc.snr_db = cfg.snr_db_p2;
          break;
        case Paradigm::P3:
          sc.n_attended = scaled(109) - (deficit[static_cast<std::size_t>(s)] ? 1 : 0);
          sc.n_unattended = scaled(1172);
          sc.snr_db = cfg.snr_db_p3;
          break;
      }
      RngStream prng = subj.derive(to_string(p));
      std::uint64_t id_base = (static_cast<std::uint64_t>(s) << 40) |
                              (static_cast<std::uint64_t>(p) << 32);
      out.append(synth_subject(s, p, sc, prng, id_base));
    }
  }
  return out;
}

ContinuousRecording synth_continuous_recording(int subject_id, Paradigm paradigm,
                                               int n_events, double snr_db,
                                               RngStream& rng) {
  const double fs = 1000.0;
  const int spacing = 1500;
  const int margin = 2000;
  const Eigen::Index N = 2 * margin + static_cast<Eigen::Index>(n_events) * spacing;

  ContinuousRecording r;
  r.subject_id = subject_id;
  r.paradigm = paradigm;
  r.fs_hz = static_cast<float>(fs);

  NoiseModel nm = NoiseModel::defaults();
  RngStream noise_rng = rng.derive("noise");
  r.data = gen_noise(nm, noise_rng, kChannels, static_cast<int>(N));

  RngStream shape_rng = rng.derive("erp-shape");
  ErpShape shape;
  shape.latency_s = shape_rng.uniform(0.35, 0.55);
  shape.width_s = shape_rng.uniform(0.3, 0.6);
  shape.topography = random_smooth_topography(shape_rng);
  shape.amplitude_uv = std::pow(10.0, snr_db / 20.0) * nm.rms_uv * std::sqrt(2.0 * kChannels);
  const int onset1k = static_cast<int>(std::lround(0.2 * fs));
  Eigen::MatrixXf erp = gen_erp_waveform(shape, fs, static_cast<int>(std::lround(1.2 * fs)));

  for (int i = 0; i < n_events; ++i) {
    RecordingEvent ev;
    ev.sample_index = margin + static_cast<std::int64_t>(i) * spacing;
    ev.label = (i % 4 == 0) ? Label::Attended : Label::Unattended;
    ev.trial_id = i / 8;
    r.events.push_back(ev);
    if (ev.label == Label::Attended)
      r.data.middleCols(ev.sample_index - onset1k, erp.cols()) += erp;
  }
  return r;
}

}  // namespace aad
