#include "aad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace aad {

Role SplitPlan::role_of(int fold, const Epoch& e) const {
  if (scheme == SplitScheme::EightFold) {
    auto it = trial_roles[static_cast<std::size_t>(fold)].find(
        TrialKey{e.subject_id, e.paradigm, e.trial_id});
    if (it == trial_roles[static_cast<std::size_t>(fold)].end())
      throw EvalError("SplitPlan: unknown trial");
    return it->second;
  }
  auto it = subject_roles[static_cast<std::size_t>(fold)].find(e.subject_id);
  if (it == subject_roles[static_cast<std::size_t>(fold)].end())
    throw EvalError("SplitPlan: unknown subject");
  return it->second;
}

SplitPlan make_8fold_plan(const EpochSet& original, RngStream& rng, int n_folds) {
  std::map<std::pair<int, Paradigm>, std::set<int>> groups;
  for (const Epoch& e : original.epochs)
    groups[{e.subject_id, e.paradigm}].insert(e.trial_id);

  SplitPlan plan;
  plan.scheme = SplitScheme::EightFold;
  plan.n_folds = n_folds;
  plan.trial_roles.resize(static_cast<std::size_t>(n_folds));

  std::map<TrialKey, int> fold_of;
  for (const auto& [key, trials] : groups) {
    if (trials.size() < static_cast<std::size_t>(n_folds))
      throw EvalError("make_8fold_plan: fewer trials than folds for subject " +
                      std::to_string(key.first));
    std::vector<int> t(trials.begin(), trials.end());
    RngStream g = rng.derive("deal/subject=" + std::to_string(key.first) + "/" +
                             to_string(key.second));
    std::vector<std::size_t> perm = g.permutation(t.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
      fold_of[TrialKey{key.first, key.second, t[perm[i]]}] =
          static_cast<int>(i % static_cast<std::size_t>(n_folds));
  }

  for (int f = 0; f < n_folds; ++f) {
    auto& roles = plan.trial_roles[static_cast<std::size_t>(f)];
    // Deal the train portion 4:1 into train/validation per group.
    std::map<std::pair<int, Paradigm>, std::vector<TrialKey>> train_portion;
    for (const auto& [key, fold] : fold_of) {
      if (fold == f)
        roles[key] = Role::Test;
      else
        train_portion[{key.subject_id, key.paradigm}].push_back(key);
    }
    for (auto& [gkey, keys] : train_portion) {
      RngStream g = rng.derive("val/fold=" + std::to_string(f) +
                               "/subject=" + std::to_string(gkey.first) + "/" +
                               to_string(gkey.second));
      std::vector<std::size_t> perm = g.permutation(keys.size());
      for (std::size_t i = 0; i < perm.size(); ++i)
        roles[keys[perm[i]]] = (i % 5 == 4) ? Role::Validation : Role::Train;
    }
  }
  return plan;
}

SplitPlan make_loso_plan(int n_subjects, RngStream& rng) {
  if (n_subjects < 3) throw EvalError("make_loso_plan: need at least 3 subjects");
  SplitPlan plan;
  plan.scheme = SplitScheme::Loso;
  plan.n_folds = n_subjects;
  plan.subject_roles.resize(static_cast<std::size_t>(n_subjects));
  for (int f = 0; f < n_subjects; ++f) {
    auto& roles = plan.subject_roles[static_cast<std::size_t>(f)];
    std::vector<int> rest;
    for (int s = 1; s <= n_subjects; ++s) {
      if (s == f + 1)
        roles[s] = Role::Test;
      else
        rest.push_back(s);
    }
    // 4:1 by subject count, rounded (23 -> 18 train / 5 validation).
    auto n_val = static_cast<std::size_t>(std::lround(rest.size() / 5.0));
    if (n_val == 0) n_val = 1;
    RngStream g = rng.derive("loso/fold=" + std::to_string(f));
    std::vector<std::size_t> val_idx = g.choice(rest.size(), n_val);
    for (int s : rest) roles[s] = Role::Train;
    for (std::size_t i : val_idx) roles[rest[i]] = Role::Validation;
  }
  return plan;
}

nn::Tensor4 epochs_to_batch(const std::vector<const Epoch*>& epochs) {
  if (epochs.empty()) throw EvalError("epochs_to_batch: empty batch");
  const int C = epochs[0]->channels();
  const int T = epochs[0]->samples();
  nn::Tensor4 x(static_cast<int>(epochs.size()), 1, C, T);
  for (std::size_t i = 0; i < epochs.size(); ++i)
    x.plane(static_cast<int>(i), 0) = epochs[i]->data;
  return x;
}

namespace {

Eigen::VectorXf labels_of(const std::vector<const Epoch*>& epochs) {
  Eigen::VectorXf y(static_cast<Eigen::Index>(epochs.size()));
  for (std::size_t i = 0; i < epochs.size(); ++i)
    y[static_cast<Eigen::Index>(i)] =
        epochs[i]->label == Label::Attended ? 1.0f : 0.0f;
  return y;
}

float eval_bce(EegNet& model, const std::vector<const Epoch*>& set, int batch_size) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t at = 0; at < set.size(); at += static_cast<std::size_t>(batch_size)) {
    std::size_t len = std::min(static_cast<std::size_t>(batch_size), set.size() - at);
    std::vector<const Epoch*> chunk(set.begin() + static_cast<std::ptrdiff_t>(at),
                                    set.begin() + static_cast<std::ptrdiff_t>(at + len));
    Eigen::VectorXf p = model.forward(epochs_to_batch(chunk), false);
    acc += static_cast<double>(nn::bce_loss(p, labels_of(chunk))) * static_cast<double>(len);
    n += len;
  }
  return static_cast<float>(acc / static_cast<double>(n));
}

}  // namespace

TrainResult train(EegNet& model, const std::vector<const Epoch*>& train_set,
                  const std::vector<const Epoch*>& val_set, const TrainConfig& cfg,
                  RngStream& rng) {
  if (train_set.empty() || val_set.empty())
    throw EvalError("train: empty train or validation set");

  RngStream drop_rng = rng.derive("dropout");
  model.set_dropout_stream(&drop_rng);
  nn::AdamConfig ac;
  ac.lr = cfg.lr;
  nn::Adam opt(model.params(), ac);

  TrainResult res;
  for (int pass = 0; pass < cfg.epochs; ++pass) {
    RngStream shuffle = rng.derive("shuffle/pass=" + std::to_string(pass));
    std::vector<std::size_t> order = shuffle.permutation(train_set.size());

    double loss_acc = 0.0;
    std::size_t n_seen = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t len =
          std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - at);
      if (len < 2) break;  // batchnorm needs at least 2 samples
      std::vector<const Epoch*> chunk(len);
      for (std::size_t i = 0; i < len; ++i) chunk[i] = train_set[order[at + i]];

      Eigen::VectorXf y = labels_of(chunk);
      Eigen::VectorXf p = model.forward(epochs_to_batch(chunk), true);
      float loss = nn::bce_loss(p, y);
      if (!std::isfinite(loss))
        throw EvalError("train: non-finite loss at pass " + std::to_string(pass));
      loss_acc += static_cast<double>(loss) * static_cast<double>(len);
      n_seen += len;

      model.zero_grad();
      model.backward(nn::bce_grad_logit(p, y));
      opt.step();
      model.apply_max_norm();
    }
    res.train_loss.push_back(static_cast<float>(loss_acc / static_cast<double>(n_seen)));

    float vl = eval_bce(model, val_set, cfg.batch_size);
    if (!std::isfinite(vl))
      throw EvalError("train: non-finite validation loss at pass " + std::to_string(pass));
    res.val_loss.push_back(vl);
    if (res.best_pass < 0 || vl < res.best_val_loss) {
      res.best_pass = pass;
      res.best_val_loss = vl;
      res.best = snapshot(model);
    }
  }
  restore(model, res.best);
  model.set_dropout_stream(nullptr);
  return res;
}

Eigen::VectorXf predict(EegNet& model, const std::vector<const Epoch*>& epochs,
                        int batch_size) {
  Eigen::VectorXf out(static_cast<Eigen::Index>(epochs.size()));
  for (std::size_t at = 0; at < epochs.size();
       at += static_cast<std::size_t>(batch_size)) {
    std::size_t len = std::min(static_cast<std::size_t>(batch_size), epochs.size() - at);
    std::vector<const Epoch*> chunk(epochs.begin() + static_cast<std::ptrdiff_t>(at),
                                    epochs.begin() + static_cast<std::ptrdiff_t>(at + len));
    Eigen::VectorXf p = model.forward(epochs_to_batch(chunk), false);
    for (std::size_t i = 0; i < len; ++i) out[static_cast<Eigen::Index>(at + i)] = p[static_cast<Eigen::Index>(i)];
  }
  return out;
}

double balanced_accuracy(const Eigen::VectorXf& probs, const std::vector<Label>& labels) {
  if (static_cast<std::size_t>(probs.size()) != labels.size())
    throw EvalError("balanced_accuracy: size mismatch");
  std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool pred = probs[static_cast<Eigen::Index>(i)] > 0.5f;
    if (labels[i] == Label::Attended)
      (pred ? tp : fn)++;
    else
      (pred ? fp : tn)++;
  }
  if (tp + fn == 0 || tn + fp == 0)
    throw EvalError("balanced_accuracy: single-class label set");
  double tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  double tnr = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return (tpr + tnr) / 2.0;
}

double paired_permutation_test(const std::vector<double>& a, const std::vector<double>& b,
                               RngStream& rng, int n_draws) {
  if (a.size() != b.size()) throw EvalError("paired_permutation_test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw EvalError("paired_permutation_test: need at least 2 pairs");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double obs = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  const double tol = 1e-12;

  if (n <= 12) {
    std::uint64_t count = 0;
    std::uint64_t total = 1ULL << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        m += (mask >> i) & 1 ? -d[i] : d[i];
      if (m / static_cast<double>(n) >= obs - tol) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
  }

  std::uint64_t count = 0;
  for (int k = 0; k < n_draws; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      m += (rng.next_u32() & 1u) ? -d[i] : d[i];
    if (m / static_cast<double>(n) >= obs - tol) ++count;
  }
  return (1.0 + static_cast<double>(count)) / (1.0 + static_cast<double>(n_draws));
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Original: return "original";
    case Variant::Augmented: return "augmented";
    case Variant::ParadigmSpecific: return "paradigm_specific";
  }
  return "?";
}

std::vector<double> ExperimentReport::accuracies(Variant v,
                                                 std::optional<Paradigm> p) const {
  // One value per fold: the row itself, or the mean over paradigms.
  std::map<int, std::pair<double, int>> by_fold;
  for (const ReportRow& r : rows) {
    if (r.variant != v) continue;
    if (p && r.paradigm != *p) continue;
    auto& [sum, cnt] = by_fold[r.fold];
    sum += r.balanced_acc;
    ++cnt;
  }
  std::vector<double> out;
  for (auto& [fold, sc] : by_fold) out.push_back(sc.first / sc.second);
  return out;
}

std::size_t leakage_count(const std::vector<const Epoch*>& train_side,
                          const std::vector<const Epoch*>& held_out) {
  std::set<std::uint64_t> train_ids;
  for (const Epoch* e : train_side)
    for (std::uint64_t id : provenance_ids(*e)) train_ids.insert(id);
  std::size_t leaked = 0;
  for (const Epoch* e : held_out)
    for (std::uint64_t id : provenance_ids(*e))
      if (train_ids.count(id)) ++leaked;
  return leaked;
}

namespace {

std::vector<const Epoch*> ptrs(const EpochSet& s) {
  std::vector<const Epoch*> out;
  out.reserve(s.size());
  for (const Epoch& e : s.epochs) out.push_back(&e);
  return out;
}

std::vector<const Epoch*> corpus_ptrs(const AugmentedCorpus& c,
                                      std::optional<Paradigm> p = {}) {
  std::vector<const Epoch*> out;
  for (const EpochSet* s : {&c.upsampled, &c.sim0, &c.sim3, &c.sim6})
    for (const Epoch& e : s->epochs)
      if (!p || e.paradigm == *p) out.push_back(&e);
  return out;
}

std::set<Paradigm> paradigms_of(const EpochSet& s) {
  std::set<Paradigm> out;
  for (const Epoch& e : s.epochs) out.insert(e.paradigm);
  return out;
}

}  // namespace

ExperimentReport run_experiment(const EpochSet& original, const SplitPlan& plan,
                                const ExperimentConfig& cfg, RngStream& rng) {
  ExperimentReport report;
  report.scheme = plan.scheme;
  const std::set<Paradigm> paradigms = paradigms_of(original);

  for (int fold = 0; fold < plan.n_folds; ++fold) {
    EpochSet train_side, val_side, test_side;
    for (const Epoch& e : original.epochs) {
      switch (plan.role_of(fold, e)) {
        case Role::Train: train_side.push(e); break;
        case Role::Validation: val_side.push(e); break;
        case Role::Test: test_side.push(e); break;
      }
    }
    RngStream frng = rng.derive("fold=" + std::to_string(fold));

    bool needs_augmented =
        std::count(cfg.variants.begin(), cfg.variants.end(), Variant::Augmented) ||
        std::count(cfg.variants.begin(), cfg.variants.end(), Variant::ParadigmSpecific);
    AugmentedCorpus train_corpus, val_corpus;
    if (needs_augmented) {
      RngStream atr = frng.derive("augment-train");
      RngStream ava = frng.derive("augment-val");
      train_corpus = build_augmented_corpus(train_side, atr);
      val_corpus = build_augmented_corpus(val_side, ava);
    }

    auto eval_on_test = [&](EegNet& model, Variant v, std::optional<Paradigm> only) {
      for (Paradigm p : paradigms) {
        if (only && p != *only) continue;
        std::vector<const Epoch*> te;
        std::vector<Label> labels;
        for (const Epoch& e : test_side.epochs)
          if (e.paradigm == p) {
            te.push_back(&e);
            labels.push_back(e.label);
          }
        if (te.empty()) continue;
        double acc = balanced_accuracy(predict(model, te, cfg.train.batch_size), labels);
        report.rows.push_back({fold, v, p, acc});
      }
    };

    for (Variant v : cfg.variants) {
      RngStream vrng = frng.derive(to_string(v));
      if (v == Variant::ParadigmSpecific) {
        for (Paradigm p : paradigms) {
          RngStream prng = vrng.derive(to_string(p));
          EegNet model(cfg.model);
          RngStream wrng = prng.derive("init");
          model.init_weights(wrng);
          TrainResult tr = train(model, corpus_ptrs(train_corpus, p),
                                 corpus_ptrs(val_corpus, p), cfg.train, prng);
          report.curves.emplace_back(fold, v, tr.train_loss, tr.val_loss);
          eval_on_test(model, v, p);
        }
        continue;
      }
      EegNet model(cfg.model);
      RngStream wrng = vrng.derive("init");
      model.init_weights(wrng);
      std::vector<const Epoch*> tr_set, va_set;
      if (v == Variant::Original) {
        tr_set = ptrs(train_side);
        va_set = ptrs(val_side);
      } else {
        tr_set = corpus_ptrs(train_corpus);
        va_set = corpus_ptrs(val_corpus);
      }
      TrainResult tr = train(model, tr_set, va_set, cfg.train, vrng);
      report.curves.emplace_back(fold, v, tr.train_loss, tr.val_loss);
      eval_on_test(model, v, {});
    }
  }

  // Declared comparisons, one-sided.
  auto has = [&](Variant v) {
    return std::count(cfg.variants.begin(), cfg.variants.end(), v) > 0;
  };
  RngStream crng = rng.derive("comparisons");
  auto compare = [&](Variant hi, Variant lo, std::optional<Paradigm> p,
                     const std::string& desc) {
    std::vector<double> a = report.accuracies(hi, p);
    std::vector<double> b = report.accuracies(lo, p);
    if (a.size() != b.size() || a.size() < 2) return;
    RngStream c = crng.derive(desc);
    report.comparisons.push_back({desc, paired_permutation_test(a, b, c)});
  };
  if (has(Variant::Augmented) && has(Variant::Original)) {
    compare(Variant::Augmented, Variant::Original, {}, "augmented>original/all");
    for (Paradigm p : paradigms)
      compare(Variant::Augmented, Variant::Original, p,
              std::string("augmented>original/") + to_string(p));
  }
  if (has(Variant::ParadigmSpecific) && has(Variant::Augmented))
    for (Paradigm p : paradigms)
      compare(Variant::ParadigmSpecific, Variant::Augmented, p,
              std::string("specific>independent/") + to_string(p));
  return report;
}

void write_report_csv(const ExperimentReport& r, const std::filesystem::path& dest) {
  std::ofstream os(dest);
  if (!os) throw EvalError("write_report_csv: cannot open " + dest.string());
  os << "fold,variant,paradigm,balanced_accuracy\n";
  char buf[64];
  for (const ReportRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%.6f", row.balanced_acc);
    os << row.fold << "," << to_string(row.variant) << "," << to_string(row.paradigm)
       << "," << buf << "\n";
  }
  for (const Comparison& c : r.comparisons) {
    std::snprintf(buf, sizeof buf, "%.6g", c.p_value);
    os << "# comparison," << c.description << ",p=" << buf << "\n";
  }
}

void write_report_markdown(const ExperimentReport& r, const std::filesystem::path& dest) {
  std::ofstream os(dest);
  if (!os) throw EvalError("write_report_markdown: cannot open " + dest.string());

  std::set<Variant> variants;
  std::set<Paradigm> paradigms;
  for (const ReportRow& row : r.rows) {
    variants.insert(row.variant);
    paradigms.insert(row.paradigm);
  }
  os << "# Balanced accuracy ("
     << (r.scheme == SplitScheme::EightFold ? "8-fold" : "LOSO") << ")\n\n";
  os << "| variant |";
  for (Paradigm p : paradigms) os << " " << to_string(p) << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < paradigms.size(); ++i) os << "---|";
  os << "\n";
  char buf[96];
  for (Variant v : variants) {
    os << "| " << to_string(v) << " |";
    for (Paradigm p : paradigms) {
      std::vector<double> acc = r.accuracies(v, p);
      if (acc.empty()) {
        os << " - |";
        continue;
      }
      double mean = std::accumulate(acc.begin(), acc.end(), 0.0) /
                    static_cast<double>(acc.size());
      double var = 0.0;
      for (double a : acc) var += (a - mean) * (a - mean);
      double sd = acc.size() > 1 ? std::sqrt(var / (static_cast<double>(acc.size()) - 1)) : 0.0;
      std::snprintf(buf, sizeof buf, " %.3f ± %.3f |", mean, sd);
      os << buf;
    }
    os << "\n";
  }
  if (!r.comparisons.empty()) {
    os << "\n## Comparisons (one-sided paired permutation)\n\n";
    for (const Comparison& c : r.comparisons) {
      const char* marker = c.p_value < 0.001 ? "**" : c.p_value <= 0.05 ? "*" : "";
      std::snprintf(buf, sizeof buf, "- %s: p = %.4g %s\n", c.description.c_str(),
                    c.p_value, marker);
      os << buf;
    }
  }
}

}  // namespace aad
