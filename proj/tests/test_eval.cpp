#include "aad/eval.hpp"
#include "aad/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace aad;

namespace {

// Small separable corpus: class means differ strongly in one channel.
EpochSet toy_corpus(int n_per_class, std::uint64_t seed, int subject = 1,
                    int epochs_per_trial = 4) {
  RngStream rng(seed, {"eval", "toy"});
  EpochSet s;
  for (int i = 0; i < 2 * n_per_class; ++i) {
    Epoch e;
    e.id = seed * 100000 + static_cast<std::uint64_t>(i);
    e.subject_id = subject;
    e.paradigm = Paradigm::P1;
    e.trial_id = i / epochs_per_trial;
    e.label = i % 2 ? Label::Attended : Label::Unattended;
    e.data = Eigen::MatrixXf(kChannels, kEpochSamples);
    for (int c = 0; c < kChannels; ++c)
      for (int t = 0; t < kEpochSamples; ++t)
        e.data(c, t) = static_cast<float>(rng.normal());
    if (e.label == Label::Attended)
      e.data.row(3).segment(100, 80).array() += 8.0f;
    s.push(std::move(e));
  }
  return s;
}

std::vector<const Epoch*> ptrs(const EpochSet& s) {
  std::vector<const Epoch*> out;
  for (const Epoch& e : s.epochs) out.push_back(&e);
  return out;
}

}  // namespace

TEST_CASE("8-fold plan partitions trials with stratified folds") {
  DatasetSynthConfig cfg;
  cfg.n_subjects = 2;
  cfg.count_scale = 0.4;
  EpochSet original = synth_dataset(cfg, 31);

  RngStream rng(31, {"eval", "plan"});
  SplitPlan plan = make_8fold_plan(original, rng);
  REQUIRE(plan.n_folds == 8);
  REQUIRE(plan.trial_roles.size() == 8);

  // collect all trials from the data
  std::set<TrialKey> trials;
  for (const Epoch& e : original.epochs)
    trials.insert({e.subject_id, e.paradigm, e.trial_id});

  for (int f = 0; f < 8; ++f) {
    CHECK(plan.trial_roles[f].size() == trials.size());
    int n_test = 0, n_val = 0, n_train = 0;
    for (const auto& [key, role] : plan.trial_roles[f]) {
      CHECK(trials.count(key) == 1);
      if (role == Role::Test) ++n_test;
      else if (role == Role::Validation) ++n_val;
      else ++n_train;
    }
    CHECK(n_test > 0);
    CHECK(n_val > 0);
    // roughly 4:1 within the train portion (grouping rounds per
    // subject and paradigm)
    CHECK(n_train >= 3 * n_val);
    CHECK(n_train <= 6 * n_val);
  }

  // each trial is in the test set of exactly one fold
  for (const TrialKey& t : trials) {
    int test_folds = 0;
    for (int f = 0; f < 8; ++f)
      if (plan.trial_roles[f].at(t) == Role::Test) ++test_folds;
    CHECK(test_folds == 1);
  }
}

TEST_CASE("loso plan holds out each subject exactly once") {
  RngStream rng(5, {"eval", "loso"});
  SplitPlan plan = make_loso_plan(24, rng);
  REQUIRE(plan.n_folds == 24);
  std::set<int> held_out;
  for (int f = 0; f < 24; ++f) {
    int n_test = 0, n_val = 0, n_train = 0;
    for (const auto& [subject, role] : plan.subject_roles[f]) {
      if (role == Role::Test) {
        ++n_test;
        held_out.insert(subject);
      } else if (role == Role::Validation) {
        ++n_val;
      } else {
        ++n_train;
      }
    }
    CHECK(n_test == 1);
    CHECK(n_val == 5);
    CHECK(n_train == 18);
  }
  CHECK(held_out.size() == 24);
}

TEST_CASE("training overfits a separable toy set and restores the best pass") {
  EpochSet s = toy_corpus(32, 91);
  std::vector<const Epoch*> all = ptrs(s);

  EegNet model;
  RngStream init(91, {"eval", "init"});
  model.init_weights(init);

  TrainConfig cfg;
  cfg.epochs = 150;
  RngStream rng(91, {"eval", "train"});
  TrainResult res = train(model, all, all, cfg, rng);

  REQUIRE(res.train_loss.size() == 150);
  REQUIRE(res.val_loss.size() == 150);
  CHECK(res.best_pass >= 0);
  // returned checkpoint attains the minimum validation loss
  float min_loss = *std::min_element(res.val_loss.begin(), res.val_loss.end());
  CHECK(res.best_val_loss == min_loss);

  Eigen::VectorXf p = predict(model, all);
  std::vector<Label> labels;
  for (const Epoch* e : all) labels.push_back(e->label);
  CHECK(balanced_accuracy(p, labels) >= 0.99);
}

TEST_CASE("training is bit-deterministic given the seed") {
  EpochSet s = toy_corpus(16, 17);
  std::vector<const Epoch*> all = ptrs(s);
  TrainConfig cfg;
  cfg.epochs = 5;

  auto run = [&]() {
    EegNet model;
    RngStream init(17, {"eval", "init-det"});
    model.init_weights(init);
    RngStream rng(17, {"eval", "train-det"});
    return train(model, all, all, cfg, rng);
  };
  TrainResult a = run();
  TrainResult b = run();
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.val_loss == b.val_loss);
}

TEST_CASE("balanced accuracy handles imbalance and degenerate labels") {
  // all predicted attended with 10% prevalence -> 0.5
  const int n = 100;
  Eigen::VectorXf p = Eigen::VectorXf::Constant(n, 0.9f);
  std::vector<Label> labels(n, Label::Unattended);
  for (int i = 0; i < 10; ++i) labels[i] = Label::Attended;
  CHECK(balanced_accuracy(p, labels) == doctest::Approx(0.5));

  // perfect predictions
  Eigen::VectorXf q(4);
  q << 0.9f, 0.1f, 0.8f, 0.2f;
  std::vector<Label> l2{Label::Attended, Label::Unattended, Label::Attended,
                        Label::Unattended};
  CHECK(balanced_accuracy(q, l2) == doctest::Approx(1.0));

  // TPR 0.8, TNR 0.6 by construction -> 0.7
  Eigen::VectorXf r(15);
  std::vector<Label> l3;
  for (int i = 0; i < 5; ++i) {  // 5 attended, 4 hits
    r[i] = i < 4 ? 0.9f : 0.1f;
    l3.push_back(Label::Attended);
  }
  for (int i = 0; i < 10; ++i) {  // 10 unattended, 6 correct
    r[5 + i] = i < 6 ? 0.1f : 0.9f;
    l3.push_back(Label::Unattended);
  }
  CHECK(balanced_accuracy(r, l3) == doctest::Approx(0.7));

  std::vector<Label> single(4, Label::Attended);
  CHECK_THROWS_AS(balanced_accuracy(q, single), EvalError);
}

TEST_CASE("permutation test: exact enumeration cases") {
  RngStream rng(1, {"eval", "perm"});
  // 3 all-positive pairs -> exactly 1/8
  std::vector<double> a{0.7, 0.8, 0.75}, b{0.6, 0.65, 0.7};
  CHECK(paired_permutation_test(a, b, rng) == doctest::Approx(0.125).epsilon(1e-12));

  // identical scores -> p = 1
  std::vector<double> c{0.5, 0.5, 0.5};
  CHECK(paired_permutation_test(c, c, rng) == doctest::Approx(1.0));

  std::vector<double> wrong{0.1, 0.2};
  CHECK_THROWS_AS(paired_permutation_test(a, wrong, rng), EvalError);
}

TEST_CASE("sampled permutation p matches enumeration within 0.01") {
  RngStream rng(99, {"eval", "perm-mc"});
  for (int trial = 0; trial < 50; ++trial) {
    RngStream r = rng.derive("trial=" + std::to_string(trial));
    int n = 3 + static_cast<int>(r.next_u32() % 10);  // 3..12
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = r.uniform();
      b[i] = r.uniform();
    }
    RngStream re = r.derive("exact");
    double exact = paired_permutation_test(a, b, re);

    // force the sampled path by asking for it on the same data: build
    // a >12-sample equivalent is not possible without changing data,
    // so sample explicitly via the public API on padded data with
    // zero-difference pairs (zero diffs count as >= observed, both in
    // enumeration and sampling, shifting both estimates identically).
    std::vector<double> ap = a, bp = b;
    ap.push_back(0.5);  // 13 pairs -> sampled branch
    bp.push_back(0.5);
    std::vector<double> ae = a, be = b;
    ae.push_back(0.5);
    be.push_back(0.5);
    // exact reference for the padded set by direct enumeration here
    std::vector<double> d(ae.size());
    for (std::size_t i = 0; i < ae.size(); ++i) d[i] = ae[i] - be[i];
    double mean_obs = 0;
    for (double v : d) mean_obs += v;
    mean_obs /= static_cast<double>(d.size());
    int count = 0;
    int m = static_cast<int>(d.size());
    for (int mask = 0; mask < (1 << m); ++mask) {
      double s = 0;
      for (int i = 0; i < m; ++i) s += (mask >> i & 1) ? -d[i] : d[i];
      if (s / m >= mean_obs - 1e-12) ++count;
    }
    double exact_padded = static_cast<double>(count) / (1 << m);

    RngStream rs = r.derive("sampled");
    double sampled = paired_permutation_test(ap, bp, rs, 200000);
    CHECK(std::abs(sampled - exact_padded) <= 0.01);
    CHECK(exact > 0.0);
    CHECK(exact <= 1.0);
  }
}

TEST_CASE("leakage audit counts provenance intersections") {
  EpochSet s = toy_corpus(8, 55);
  std::vector<const Epoch*> all = ptrs(s);
  std::vector<const Epoch*> train_side(all.begin(), all.begin() + 8);
  std::vector<const Epoch*> held(all.begin() + 8, all.end());
  CHECK(leakage_count(train_side, held) == 0);

  // an epoch derived from a training epoch leaks
  Epoch derived = s.epochs[12];
  derived.origin = Origin::UpsampledAvg;
  derived.sources[0] = s.epochs[0].id;
  std::vector<const Epoch*> held2 = held;
  held2.push_back(&derived);
  CHECK(leakage_count(train_side, held2) == 1);
}

TEST_CASE("run_experiment produces a complete, test-clean report") {
  DatasetSynthConfig dcfg;
  dcfg.n_subjects = 2;
  dcfg.count_scale = 0.3;
  dcfg.snr_db_p1 = dcfg.snr_db_p2 = dcfg.snr_db_p3 = 6.0;
  EpochSet original = synth_dataset(dcfg, 77);

  RngStream prng(77, {"eval", "plan2"});
  SplitPlan plan = make_8fold_plan(original, prng, 4);

  ExperimentConfig cfg;
  cfg.train.epochs = 2;
  cfg.variants = {Variant::Original, Variant::Augmented};
  RngStream rng(77, {"eval", "exp"});
  ExperimentReport report = run_experiment(original, plan, cfg, rng);

  // 4 folds x 2 variants x 3 paradigms
  CHECK(report.rows.size() == 4 * 2 * 3);
  for (const ReportRow& r : report.rows) {
    CHECK(r.balanced_acc >= 0.0);
    CHECK(r.balanced_acc <= 1.0);
  }
  CHECK_FALSE(report.comparisons.empty());
  for (const Comparison& c : report.comparisons) {
    CHECK(c.p_value > 0.0);
    CHECK(c.p_value <= 1.0);
  }
  CHECK(report.accuracies(Variant::Original).size() == 4);
}
