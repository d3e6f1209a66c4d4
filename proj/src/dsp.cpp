#include "aad/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numeric>

namespace aad {
namespace {

double hamming(int n, int N) {
  return 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (N - 1));
}

// Unit-DC-gain windowed-sinc low-pass taps.
Eigen::VectorXd sinc_lowpass(double cutoff_hz, double fs_hz, int n_taps) {
  Eigen::VectorXd h(n_taps);
  int mid = (n_taps - 1) / 2;
  double fc = cutoff_hz / fs_hz;  // cycles per sample
  for (int n = 0; n < n_taps; ++n) {
    int m = n - mid;
    double s = (m == 0) ? 2.0 * fc : std::sin(2.0 * M_PI * fc * m) / (M_PI * m);
    h[n] = s * hamming(n, n_taps);
  }
  h /= h.sum();
  return h;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Full linear convolution via FFT, double precision.
Eigen::VectorXd fft_convolve_full(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  const std::size_t nx = static_cast<std::size_t>(x.size());
  const std::size_t nh = static_cast<std::size_t>(h.size());
  const std::size_t nout = nx + nh - 1;
  const std::size_t nfft = next_pow2(nout);
  Eigen::FFT<double> fft;
  std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
  std::copy(x.data(), x.data() + nx, a.begin());
  std::copy(h.data(), h.data() + nh, b.begin());
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t i = 0; i < nfft; ++i) fa[i] *= fb[i];
  std::vector<double> y;
  fft.inv(y, fa);
  return Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(nout));
}

}  // namespace

double FirFilter::gain_at(double f_hz) const {
  // Direct DTFT evaluation at one frequency.
  std::complex<double> acc(0.0, 0.0);
  double w = 2.0 * M_PI * f_hz / fs_hz;
  for (int n = 0; n < taps.size(); ++n)
    acc += taps[n] * std::exp(std::complex<double>(0.0, -w * n));
  return std::abs(acc);
}

FirFilter design_lowpass(double cutoff_hz, double fs_hz, int n_taps) {
  if (n_taps % 2 == 0) throw DspError("design_lowpass: tap count must be odd");
  if (cutoff_hz <= 0 || cutoff_hz >= fs_hz / 2) throw DspError("design_lowpass: bad cutoff");
  FirFilter f;
  f.taps = sinc_lowpass(cutoff_hz, fs_hz, n_taps);
  f.lo_hz = 0.0;
  f.hi_hz = cutoff_hz;
  f.fs_hz = fs_hz;
  return f;
}

FirFilter design_bandpass(double lo_hz, double hi_hz, double fs_hz, int n_taps) {
  if (n_taps % 2 == 0) throw DspError("design_bandpass: tap count must be odd");
  if (!(0 < lo_hz && lo_hz < hi_hz && hi_hz < fs_hz / 2))
    throw DspError("design_bandpass: bad band edges");
  FirFilter f;
  f.taps = sinc_lowpass(hi_hz, fs_hz, n_taps) - sinc_lowpass(lo_hz, fs_hz, n_taps);
  f.lo_hz = lo_hz;
  f.hi_hz = hi_hz;
  f.fs_hz = fs_hz;
  return f;
}

Eigen::VectorXf filtfilt(const Eigen::VectorXf& x, const FirFilter& f) {
  const int L = f.order();
  const int pad = L - 1;
  const Eigen::Index N = x.size();
  if (N <= 3 * L) throw DspError("filtfilt: signal too short for filter order");

  Eigen::VectorXd xd(N + 2 * pad);
  // Reflection padding: x[pad-i] mirrored around the first/last sample.
  for (int i = 0; i < pad; ++i) {
    xd[i] = 2.0 * x[0] - x[pad - i];
    xd[N + 2 * pad - 1 - i] = 2.0 * x[N - 1] - x[N - 1 - (pad - i)];
  }
  for (Eigen::Index i = 0; i < N; ++i) xd[pad + i] = x[i];

  // Forward-backward filtering with symmetric taps equals one
  // convolution with taps*taps and a delay of L-1.
  Eigen::VectorXd g = fft_convolve_full(f.taps, f.taps);
  Eigen::VectorXd y = fft_convolve_full(xd, g);

  Eigen::VectorXf out(N);
  for (Eigen::Index i = 0; i < N; ++i)
    out[i] = static_cast<float>(y[pad + (L - 1) + i]);
  return out;
}

Eigen::MatrixXf filtfilt_rows(const Eigen::MatrixXf& x, const FirFilter& f) {
  Eigen::MatrixXf out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.rows(); ++c)
    out.row(c) = filtfilt(x.row(c).transpose(), f).transpose();
  return out;
}

Eigen::VectorXf resample_rational(const Eigen::VectorXf& x, int up, int down) {
  if (x.size() == 0) return {};
  if (up <= 0 || down <= 0) throw DspError("resample_rational: bad factors");
  int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return x;

  // Anti-alias low-pass at the upsampled rate; cutoff at the tighter of
  // the input and output Nyquist, gain `up` to keep amplitude.
  const int n_taps = 2001;
  double cutoff = 0.5 / std::max(up, down);  // cycles per upsampled sample
  Eigen::VectorXd h = sinc_lowpass(cutoff, 1.0, n_taps) * up;
  const int mid = (n_taps - 1) / 2;

  const Eigen::Index n_in = x.size();
  const Eigen::Index n_out = (n_in * up) / down;
  Eigen::VectorXf y(n_out);
  for (Eigen::Index m = 0; m < n_out; ++m) {
    // y[m] = sum_k h[k] x_up[m*down - k + mid], x_up nonzero at multiples of up.
    std::int64_t center = static_cast<std::int64_t>(m) * down + mid;
    double acc = 0.0;
    // j ranges over input samples with up*j in [center - n_taps + 1, center].
    std::int64_t j_lo = (center - n_taps + 1 + up - 1) / up;
    if (j_lo < 0) j_lo = 0;
    std::int64_t j_hi = center / up;
    if (j_hi > n_in - 1) j_hi = n_in - 1;
    for (std::int64_t j = j_lo; j <= j_hi; ++j)
      acc += h[center - up * j] * static_cast<double>(x[j]);
    y[m] = static_cast<float>(acc);
  }
  return y;
}

Eigen::VectorXf resample_1000_to_256(const Eigen::VectorXf& x) {
  return resample_rational(x, 32, 125);
}

Eigen::MatrixXf resample_rows(const Eigen::MatrixXf& x, int up, int down) {
  if (x.cols() == 0) return x;
  Eigen::VectorXf first = resample_rational(x.row(0).transpose(), up, down);
  Eigen::MatrixXf out(x.rows(), first.size());
  out.row(0) = first.transpose();
  for (Eigen::Index c = 1; c < x.rows(); ++c)
    out.row(c) = resample_rational(x.row(c).transpose(), up, down).transpose();
  return out;
}

EpochExtraction extract_epochs(const ContinuousRecording& r, std::uint64_t id_base,
                               bool baseline_correct) {
  if (r.fs_hz != kFsHz) throw DspError("extract_epochs: recording must be at 256 Hz");
  EpochExtraction out;
  const Eigen::Index N = r.data.cols();
  std::uint64_t next_id = id_base;
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    const RecordingEvent& ev = r.events[i];
    std::int64_t start = ev.sample_index - kOnsetIndex;
    std::int64_t stop = start + kEpochSamples;  // half-open
    if (start < 0 || stop > N) {
      out.skipped_events.push_back(i);
      continue;
    }
    Epoch e;
    e.id = next_id++;
    e.subject_id = r.subject_id;
    e.paradigm = r.paradigm;
    e.trial_id = ev.trial_id;
    e.label = ev.label;
    e.origin = Origin::Experimental;
    e.data = r.data.block(0, start, kChannels, kEpochSamples);
    if (baseline_correct) {
      Eigen::VectorXf mean = e.data.leftCols(kOnsetIndex).rowwise().mean();
      e.data.colwise() -= mean;
    }
    out.epochs.push(std::move(e));
  }
  return out;
}

RejectionResult peak_to_peak_reject(const EpochSet& s, float threshold_uv) {
  RejectionResult r;
  for (const Epoch& e : s.epochs) {
    float p2p = (e.data.rowwise().maxCoeff() - e.data.rowwise().minCoeff()).maxCoeff();
    if (p2p > threshold_uv)
      ++r.rejected;
    else
      r.kept.push(e);
  }
  return r;
}

PreprocessResult preprocess_recording(const ContinuousRecording& r, std::uint64_t id_base,
                                      int bandpass_taps, float reject_uv) {
  if (r.fs_hz != 1000.0f) throw DspError("preprocess_recording: expected 1000 Hz input");
  FirFilter bp = design_bandpass(0.5, 40.0, 1000.0, bandpass_taps);

  ContinuousRecording rs;
  rs.subject_id = r.subject_id;
  rs.paradigm = r.paradigm;
  rs.fs_hz = kFsHz;
  rs.data = resample_rows(filtfilt_rows(r.data, bp), 32, 125);
  rs.events.reserve(r.events.size());
  for (const RecordingEvent& ev : r.events) {
    RecordingEvent e2 = ev;
    e2.sample_index = static_cast<std::int64_t>(
        std::llround(static_cast<double>(ev.sample_index) * 32.0 / 125.0));
    rs.events.push_back(e2);
  }

  EpochExtraction ex = extract_epochs(rs, id_base);
  RejectionResult rej = peak_to_peak_reject(ex.epochs, reject_uv);
  PreprocessResult out;
  out.epochs = std::move(rej.kept);
  out.skipped = ex.skipped_events.size();
  out.rejected = rej.rejected;
  return out;
}

}  // namespace aad
