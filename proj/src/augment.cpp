#include "aad/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace aad {
namespace {

constexpr double kGfpSearchLoS = 0.2;
constexpr double kGfpSearchHiS = 0.8;
constexpr float kDegenerateGfpUv = 1e-6f;

std::uint64_t tagged_id(int subject, Paradigm p, std::uint64_t tag, std::uint64_t seq) {
  return (static_cast<std::uint64_t>(subject) << 40) |
         (static_cast<std::uint64_t>(p) << 32) | (tag << 24) | seq;
}

}  // namespace

EpochSet upsample_by_averaging(const std::vector<const Epoch*>& cls, int k_max,
                               std::size_t target_count, RngStream& rng,
                               std::uint64_t id_base) {
  if (cls.empty()) throw AugmentError("upsample_by_averaging: empty class");
  if (cls.size() < static_cast<std::size_t>(k_max) && cls.size() > 1)
    throw AugmentError("upsample_by_averaging: class smaller than k_max");

  EpochSet out;
  const std::size_t n = cls.size();
  for (std::size_t i = 0; i < target_count; ++i) {
    int k = (n == 1) ? 1 : 1 + static_cast<int>(rng.uniform() * k_max);
    if (k > k_max) k = k_max;
    std::vector<std::size_t> src = rng.choice(n, static_cast<std::size_t>(k));

    Epoch e;
    const Epoch& first = *cls[src[0]];
    e.id = id_base + i;
    e.subject_id = first.subject_id;
    e.paradigm = first.paradigm;
    e.trial_id = first.trial_id;
    e.label = first.label;
    e.origin = Origin::UpsampledAvg;
    e.data = first.data;
    for (std::size_t j = 1; j < src.size(); ++j) e.data += cls[src[j]]->data;
    e.data /= static_cast<float>(src.size());
    for (std::size_t j = 0; j < src.size() && j < 4; ++j) e.sources[j] = cls[src[j]]->id;
    out.push(std::move(e));
  }
  return out;
}

ErpTemplate estimate_template(const std::vector<const Epoch*>& attended) {
  if (attended.empty()) throw AugmentError("estimate_template: no attended epochs");
  ErpTemplate t;
  t.subject_id = attended[0]->subject_id;
  t.paradigm = attended[0]->paradigm;
  t.waveform = Eigen::MatrixXf::Zero(kChannels, kEpochSamples);
  for (const Epoch* e : attended) t.waveform += e->data;
  t.waveform /= static_cast<float>(attended.size());

  // GFP: cross-channel standard deviation per sample.
  Eigen::RowVectorXf mean = t.waveform.colwise().mean();
  Eigen::RowVectorXf gfp =
      ((t.waveform.rowwise() - mean).array().square().colwise().mean()).sqrt();

  const int lo = kOnsetIndex + static_cast<int>(std::lround(kGfpSearchLoS * kFsHz));
  const int hi = kOnsetIndex + static_cast<int>(std::lround(kGfpSearchHiS * kFsHz));
  int best = lo;
  for (int i = lo; i <= hi && i < kEpochSamples; ++i)
    if (gfp[i] > gfp[best]) best = i;
  if (gfp[best] < kDegenerateGfpUv) {
    t.degenerate = true;
    return t;
  }
  t.peak_latency_s = (best - kOnsetIndex) / static_cast<double>(kFsHz);
  return t;
}

ErpVariation draw_variation(RngStream& rng) {
  ErpVariation v;
  v.width_s = rng.uniform(0.3, 0.6);
  const double half = std::sqrt(3.0) * 0.01;  // uniform with std 10 ms
  v.latency_jitter_s = rng.uniform(-half, half);
  return v;
}

VariedWaveform vary_erp(const ErpTemplate& t, const ErpVariation& v) {
  if (t.degenerate) throw AugmentError("vary_erp: degenerate template");
  VariedWaveform out;
  out.waveform = Eigen::MatrixXf::Zero(kChannels, kEpochSamples);

  const int peak = kOnsetIndex + static_cast<int>(std::lround(t.peak_latency_s * kFsHz));
  const int half = static_cast<int>(std::lround(kNominalErpWidthS / 2.0 * kFsHz));
  const double stretch = v.width_s / kNominalErpWidthS;
  const int center = peak + static_cast<int>(std::lround(v.latency_jitter_s * kFsHz));
  const int half_out = static_cast<int>(std::lround(half * stretch));

  if (center - half_out < 0 || center + half_out >= kEpochSamples) out.clipped = true;

  for (int dt = -half_out; dt <= half_out; ++dt) {
    int tcol = center + dt;
    if (tcol < 0 || tcol >= kEpochSamples) continue;
    double src = peak + dt / stretch;
    // Source samples outside the nominal segment contribute nothing.
    if (src < peak - half || src > peak + half) continue;
    auto s0 = static_cast<int>(std::floor(src));
    double frac = src - s0;
    if (s0 < 0 || s0 >= kEpochSamples) continue;
    Eigen::VectorXf a = t.waveform.col(s0);
    if (frac > 0.0 && s0 + 1 < kEpochSamples)
      a = (1.0f - static_cast<float>(frac)) * a +
          static_cast<float>(frac) * t.waveform.col(s0 + 1);
    out.waveform.col(tcol) = a;
  }
  return out;
}

Epoch simulate_attended(const Epoch& unattended, const Eigen::MatrixXf& waveform,
                        int gain_db, std::uint64_t new_id) {
  if (waveform.rows() != unattended.data.rows() ||
      waveform.cols() != unattended.data.cols())
    throw AugmentError("simulate_attended: shape mismatch");
  auto factor = static_cast<float>(std::pow(10.0, gain_db / 20.0));

  Epoch e = unattended;
  e.id = new_id;
  e.label = Label::Attended;
  switch (gain_db) {
    case 0: e.origin = Origin::Simulated0dB; break;
    case 3: e.origin = Origin::Simulated3dB; break;
    case 6: e.origin = Origin::Simulated6dB; break;
    default: throw AugmentError("simulate_attended: gain must be 0, 3 or 6 dB");
  }
  if (unattended.origin == Origin::Experimental) {
    e.sources = {unattended.id, kNoSource, kNoSource, kNoSource};
  }  // else keep the carrier's experimental sources
  e.data = unattended.data + factor * waveform;
  return e;
}

std::vector<std::uint64_t> provenance_ids(const Epoch& e) {
  if (e.origin == Origin::Experimental) return {e.id};
  std::vector<std::uint64_t> ids;
  for (std::uint64_t s : e.sources)
    if (s != kNoSource) ids.push_back(s);
  return ids;
}

AugmentedCorpus build_augmented_corpus(const EpochSet& original, RngStream& rng) {
  std::map<std::pair<int, Paradigm>, std::pair<std::vector<const Epoch*>,
                                               std::vector<const Epoch*>>>
      groups;
  for (const Epoch& e : original.epochs) {
    auto& g = groups[{e.subject_id, e.paradigm}];
    (e.label == Label::Attended ? g.first : g.second).push_back(&e);
  }

  AugmentedCorpus corpus;
  for (const auto& [key, g] : groups) {
    const auto& [subject, paradigm] = key;
    const auto& [att, unatt] = g;
    // A group without both classes (possible on small validation
    // slices) has no template or nothing to upsample; skip it.
    if (att.empty() || unatt.empty()) {
      corpus.skipped.emplace_back(subject, paradigm);
      continue;
    }
    const std::size_t n_u = unatt.size();
    RngStream base = rng.derive("subject=" + std::to_string(subject))
                         .derive(to_string(paradigm));

    ErpTemplate tmpl = estimate_template(att);
    if (tmpl.degenerate) {
      corpus.skipped.emplace_back(subject, paradigm);
      continue;
    }

    // Tiny classes (possible on small validation slices) cap the number of
    // epochs averaged at the class size instead of failing outright.
    auto k_for = [](std::size_t n) {
      return static_cast<int>(std::min<std::size_t>(3, n));
    };

    RngStream up_a = base.derive("upsample-attended");
    RngStream up_u = base.derive("upsample-unattended");
    corpus.upsampled.append(upsample_by_averaging(att, k_for(att.size()), 2 * n_u, up_a,
                                                  tagged_id(subject, paradigm, 1, 0)));
    corpus.upsampled.append(upsample_by_averaging(unatt, k_for(n_u), 2 * n_u, up_u,
                                                  tagged_id(subject, paradigm, 2, 0)));

    int tag = 3;
    for (int gain : {0, 3, 6}) {
      EpochSet* dest = gain == 0 ? &corpus.sim0 : gain == 3 ? &corpus.sim3 : &corpus.sim6;
      RngStream grng = base.derive("sim=" + std::to_string(gain));
      RngStream pool_rng = grng.derive("pool");
      EpochSet pool = upsample_by_averaging(
          unatt, k_for(n_u), 4 * n_u, pool_rng,
          tagged_id(subject, paradigm, static_cast<std::uint64_t>(tag), 0));

      RngStream pick_rng = grng.derive("pick");
      std::vector<bool> to_attended(pool.size(), false);
      for (std::size_t idx : pick_rng.choice(pool.size(), 2 * n_u)) to_attended[idx] = true;

      RngStream vrng = grng.derive("vary");
      std::uint64_t seq = 0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (to_attended[i]) {
          VariedWaveform w = vary_erp(tmpl, draw_variation(vrng));
          dest->push(simulate_attended(
              pool.epochs[i], w.waveform, gain,
              tagged_id(subject, paradigm, static_cast<std::uint64_t>(tag) + 3, seq++)));
        } else {
          dest->push(pool.epochs[i]);
        }
      }
      ++tag;
    }
  }
  return corpus;
}

}  // namespace aad
