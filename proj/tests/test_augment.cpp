#include "aad/augment.hpp"
#include "aad/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace aad;

namespace {

Epoch constant_epoch(float value, std::uint64_t id, Label l = Label::Attended,
                     int subject = 1, Paradigm p = Paradigm::P1) {
  Epoch e;
  e.id = id;
  e.subject_id = subject;
  e.paradigm = p;
  e.label = l;
  e.data = Eigen::MatrixXf::Constant(kChannels, kEpochSamples, value);
  return e;
}

std::vector<const Epoch*> ptrs(const std::vector<Epoch>& v) {
  std::vector<const Epoch*> out;
  for (const Epoch& e : v) out.push_back(&e);
  return out;
}

}  // namespace

TEST_CASE("upsampling a single epoch duplicates it") {
  std::vector<Epoch> src{constant_epoch(2.5f, 11)};
  RngStream rng(1, {"aug", "dup"});
  EpochSet up = upsample_by_averaging(ptrs(src), 3, 3, rng, 1000);
  REQUIRE(up.size() == 3);
  for (const Epoch& e : up.epochs) {
    CHECK(e.origin == Origin::UpsampledAvg);
    CHECK(e.data == src[0].data);
    CHECK(e.sources[0] == 11);
  }
}

TEST_CASE("averaging k=2 constant epochs gives the mean") {
  std::vector<Epoch> src;
  for (int i = 0; i < 8; ++i)
    src.push_back(constant_epoch(i % 2 ? 4.0f : 2.0f, 100 + i));
  RngStream rng(1, {"aug", "mean"});
  EpochSet up = upsample_by_averaging(ptrs(src), 3, 200, rng, 5000);
  REQUIRE(up.size() == 200);
  bool saw_pair_mean = false;
  for (const Epoch& e : up.epochs) {
    int k = 0;
    for (auto s : e.sources)
      if (s != kNoSource) ++k;
    CHECK(k >= 1);
    CHECK(k <= 3);
    // distinct sources
    std::set<std::uint64_t> uniq(e.sources.begin(), e.sources.begin() + k);
    CHECK(uniq.size() == static_cast<std::size_t>(k));
    // value equals the mean of the sources' constants
    float expect = 0;
    for (int i = 0; i < k; ++i) expect += (e.sources[i] % 2 ? 4.0f : 2.0f) / k;
    CHECK(e.data(0, 0) == doctest::Approx(expect).epsilon(1e-6));
    if (k == 2 && std::abs(e.data(0, 0) - 3.0f) < 1e-6) saw_pair_mean = true;
  }
  CHECK(saw_pair_mean);
}

TEST_CASE("upsampling a class smaller than k_max is an error") {
  std::vector<Epoch> src{constant_epoch(1.0f, 1), constant_epoch(2.0f, 2)};
  RngStream rng(1, {"aug", "small"});
  CHECK_THROWS_AS(upsample_by_averaging(ptrs(src), 3, 10, rng, 0), AugmentError);
}

TEST_CASE("template of a single epoch is that epoch") {
  std::vector<Epoch> src{constant_epoch(1.0f, 1)};
  src[0].data(3, 180) = 9.0f;  // a clear GFP peak inside [0.2, 0.8] s
  ErpTemplate t = estimate_template(ptrs(src));
  CHECK_FALSE(t.degenerate);
  CHECK(t.waveform == src[0].data);
  CHECK(t.peak_latency_s ==
        doctest::Approx((180 - kOnsetIndex) / 256.0).epsilon(1e-6));
}

TEST_CASE("cancelling epochs yield a degenerate template") {
  std::vector<Epoch> src{constant_epoch(1.0f, 1), constant_epoch(1.0f, 2)};
  src[0].data.setRandom();
  src[1].data = -src[0].data;
  ErpTemplate t = estimate_template(ptrs(src));
  CHECK(t.degenerate);
}

TEST_CASE("template recovers the planted latency at 6 dB") {
  SubjectSynthConfig cfg;
  cfg.snr_db = 6.0;
  RngStream rng(42, {"aug", "latency"});
  EpochSet s = synth_subject(4, Paradigm::P1, cfg, rng, 0);
  std::vector<const Epoch*> att;
  for (const Epoch& e : s.epochs)
    if (e.label == Label::Attended) att.push_back(&e);
  ErpTemplate t = estimate_template(att);
  REQUIRE_FALSE(t.degenerate);

  // the same stream path re-draws the same shape the generator used
  RngStream shape_rng = RngStream(42, {"aug", "latency"}).derive("erp-shape");
  double latency = shape_rng.uniform(0.35, 0.55);
  CHECK(std::abs(t.peak_latency_s - latency) <= 0.03);
}

TEST_CASE("identity variation reproduces the template segment") {
  std::vector<Epoch> src{constant_epoch(0.0f, 1)};
  // plant a bump centered at 0.45 s
  int center = kOnsetIndex + static_cast<int>(std::lround(0.45 * 256.0));
  for (int dt = -20; dt <= 20; ++dt)
    src[0].data(2, center + dt) = 5.0f * std::cos(dt / 20.0 * 1.5707963f);
  ErpTemplate t = estimate_template(ptrs(src));
  REQUIRE_FALSE(t.degenerate);

  ErpVariation v{kNominalErpWidthS, 0.0};
  VariedWaveform w = vary_erp(t, v);
  CHECK_FALSE(w.clipped);
  CHECK((w.waveform - t.waveform).cwiseAbs().maxCoeff() <= 1e-4f);
}

TEST_CASE("stretching doubles the support width") {
  ErpTemplate t;
  t.waveform = Eigen::MatrixXf::Zero(kChannels, kEpochSamples);
  int center = kOnsetIndex + static_cast<int>(std::lround(0.45 * 256.0));
  // half-sine of width 0.3 s inside the 0.45 s nominal segment
  int half = static_cast<int>(std::lround(0.15 * 256.0));
  for (int dt = -half; dt <= half; ++dt)
    t.waveform(0, center + dt) =
        5.0f * std::cos(static_cast<float>(dt) / half * 1.5707963f);
  t.peak_latency_s = 0.45;

  auto support = [](const Eigen::MatrixXf& w) {
    int lo = -1, hi = -1;
    for (int i = 0; i < w.cols(); ++i)
      if (std::abs(w(0, i)) > 0.05f) {
        if (lo < 0) lo = i;
        hi = i;
      }
    return hi - lo + 1;
  };

  VariedWaveform wide = vary_erp(t, {0.9, 0.0});  // stretch factor 2
  int s0 = support(t.waveform);
  int s1 = support(wide.waveform);
  CHECK(std::abs(s1 - 2 * s0) <= 4);
}

TEST_CASE("latency jitter has 10 ms standard deviation") {
  RngStream rng(77, {"aug", "jitter"});
  double sum = 0, sq = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    ErpVariation v = draw_variation(rng);
    CHECK(v.width_s >= 0.3);
    CHECK(v.width_s < 0.6);
    sum += v.latency_jitter_s;
    sq += v.latency_jitter_s * v.latency_jitter_s;
  }
  double mean = sum / n;
  double sd = std::sqrt(sq / n - mean * mean);
  CHECK(sd * 1000.0 >= 9.0);
  CHECK(sd * 1000.0 <= 11.0);
}

TEST_CASE("simulate_attended applies the exact amplitude factors") {
  Epoch u = constant_epoch(1.0f, 50, Label::Unattended);
  Eigen::MatrixXf w = Eigen::MatrixXf::Constant(kChannels, kEpochSamples, 1.0f);

  Epoch s0 = simulate_attended(u, w, 0, 900);
  Epoch s3 = simulate_attended(u, w, 3, 901);
  Epoch s6 = simulate_attended(u, w, 6, 902);
  CHECK(s0.label == Label::Attended);
  CHECK(s0.origin == Origin::Simulated0dB);
  CHECK(s3.origin == Origin::Simulated3dB);
  CHECK(s6.origin == Origin::Simulated6dB);
  CHECK(s0.data(0, 0) - u.data(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s3.data(0, 0) - u.data(0, 0) == doctest::Approx(1.4125).epsilon(1e-3));
  CHECK(s6.data(0, 0) - u.data(0, 0) == doctest::Approx(1.9953).epsilon(1e-3));
  CHECK(s0.sources[0] == 50);

  CHECK_THROWS_AS(simulate_attended(u, w, 9, 903), AugmentError);
  Eigen::MatrixXf bad = Eigen::MatrixXf::Zero(2, 2);
  CHECK_THROWS_AS(simulate_attended(u, bad, 0, 904), AugmentError);
}

TEST_CASE("zero waveform only flips the label") {
  Epoch u = constant_epoch(2.0f, 60, Label::Unattended);
  Eigen::MatrixXf z = Eigen::MatrixXf::Zero(kChannels, kEpochSamples);
  Epoch s = simulate_attended(u, z, 0, 61);
  CHECK(s.data == u.data);
  CHECK(s.label == Label::Attended);
}

TEST_CASE("corpus counts obey the x2 and x4 identities") {
  DatasetSynthConfig cfg;
  cfg.n_subjects = 2;
  cfg.count_scale = 0.25;  // P1: 15 attended / 65 unattended per subject
  cfg.snr_db_p1 = cfg.snr_db_p2 = cfg.snr_db_p3 = 6.0;
  EpochSet original = synth_dataset(cfg, 101);

  RngStream rng(101, {"aug", "corpus"});
  AugmentedCorpus corpus = build_augmented_corpus(original, rng);
  CHECK(corpus.skipped.empty());

  for (Paradigm p : {Paradigm::P1, Paradigm::P2, Paradigm::P3}) {
    std::uint64_t un = class_counts(original, p, Label::Unattended).total;
    for (const EpochSet* set : {&corpus.upsampled, &corpus.sim0, &corpus.sim3,
                                &corpus.sim6}) {
      CHECK(class_counts(*set, p, Label::Attended).total == 2 * un);
      CHECK(class_counts(*set, p, Label::Unattended).total == 2 * un);
    }
  }

  // provenance: every epoch resolves to experimental source ids
  std::set<std::uint64_t> experimental;
  for (const Epoch& e : original.epochs) experimental.insert(e.id);
  for (const EpochSet* set : {&corpus.upsampled, &corpus.sim0}) {
    for (const Epoch& e : set->epochs) {
      auto ids = provenance_ids(e);
      CHECK_FALSE(ids.empty());
      for (auto id : ids) CHECK(experimental.count(id) == 1);
    }
  }
}

TEST_CASE("corpus assembly is deterministic") {
  DatasetSynthConfig cfg;
  cfg.n_subjects = 1;
  cfg.count_scale = 0.1;
  cfg.snr_db_p1 = 6.0;
  EpochSet original = synth_dataset(cfg, 55);

  RngStream a(55, {"aug", "det"});
  RngStream b(55, {"aug", "det"});
  AugmentedCorpus ca = build_augmented_corpus(original, a);
  AugmentedCorpus cb = build_augmented_corpus(original, b);
  REQUIRE(ca.sim3.size() == cb.sim3.size());
  for (std::size_t i = 0; i < ca.sim3.size(); ++i)
    CHECK(ca.sim3.epochs[i].data == cb.sim3.epochs[i].data);
}
