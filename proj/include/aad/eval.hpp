#pragma once

#include "aad/augment.hpp"
#include "aad/eegnet.hpp"
#include "aad/rng.hpp"
#include "aad/types.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace aad {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SplitScheme { EightFold, Loso };
enum class Role { Train, Validation, Test };

/// Trial key for the 8-fold scheme; trial ids are scoped per
/// subject and paradigm.
struct TrialKey {
  int subject_id;
  Paradigm paradigm;
  int trial_id;
  auto operator<=>(const TrialKey&) const = default;
};

/// Fold assignments. EightFold keys trials; Loso keys subjects.
struct SplitPlan {
  SplitScheme scheme = SplitScheme::EightFold;
  int n_folds = 8;
  // EightFold: per fold, role of every trial.
  std::vector<std::map<TrialKey, Role>> trial_roles;
  // Loso: per fold, role of every subject.
  std::vector<std::map<int, Role>> subject_roles;

  Role role_of(int fold, const Epoch& e) const;
};

/// Trials shuffled and dealt into 8 folds, stratified by subject and
/// paradigm; within each fold's train portion trials subdivide 4:1
/// into train/validation.
SplitPlan make_8fold_plan(const EpochSet& original, RngStream& rng, int n_folds = 8);

/// One held-out subject per fold; the rest split 18/5 by subject.
SplitPlan make_loso_plan(int n_subjects, RngStream& rng);

struct TrainConfig {
  int epochs = 300;
  int batch_size = 64;
  float lr = 1e-4f;
};

struct TrainResult {
  ModelSnapshot best;
  std::vector<float> train_loss;  // per pass
  std::vector<float> val_loss;    // per pass, eval mode
  int best_pass = -1;
  float best_val_loss = 0.0f;
};

nn::Tensor4 epochs_to_batch(const std::vector<const Epoch*>& epochs);

/// Minibatch training with shuffled batches; returns the snapshot with
/// the lowest validation BCE (ties to the earliest pass). Throws
/// EvalError on a non-finite loss.
TrainResult train(EegNet& model, const std::vector<const Epoch*>& train_set,
                  const std::vector<const Epoch*>& val_set, const TrainConfig& cfg,
                  RngStream& rng);

Eigen::VectorXf predict(EegNet& model, const std::vector<const Epoch*>& epochs,
                        int batch_size = 64);

/// (TPR + TNR) / 2 at threshold 0.5. Throws if only one class present.
double balanced_accuracy(const Eigen::VectorXf& probs, const std::vector<Label>& labels);

/// One-sided paired sign-flip test of mean(a - b) > 0. Exhaustive
/// enumeration over 2^n flips for n <= 12, otherwise n_draws samples
/// with the (1 + k) / (1 + n) correction.
double paired_permutation_test(const std::vector<double>& a, const std::vector<double>& b,
                               RngStream& rng, int n_draws = 100000);

enum class Variant { Original, Augmented, ParadigmSpecific };

const char* to_string(Variant v);

struct ReportRow {
  int fold;
  Variant variant;
  Paradigm paradigm;
  double balanced_acc;
};

struct Comparison {
  std::string description;
  double p_value;
};

struct ExperimentReport {
  SplitScheme scheme;
  std::vector<ReportRow> rows;
  std::vector<Comparison> comparisons;
  // (fold, variant) -> loss curves of the trained model(s).
  std::vector<std::tuple<int, Variant, std::vector<float>, std::vector<float>>> curves;

  std::vector<double> accuracies(Variant v, std::optional<Paradigm> p = {}) const;
};

struct ExperimentConfig {
  TrainConfig train;
  std::vector<Variant> variants{Variant::Original, Variant::Augmented};
  EegNetConfig model;
};

/// Per fold: splits the original set, augments the train/validation
/// sides (augmented variants), trains, and evaluates balanced accuracy
/// per paradigm on the non-augmented test epochs. Then runs the
/// declared variant comparisons.
ExperimentReport run_experiment(const EpochSet& original, const SplitPlan& plan,
                                const ExperimentConfig& cfg, RngStream& rng);

/// Audits that no provenance id of any validation/test epoch appears
/// among the training epochs' provenance ids. Returns the number of
/// leaked ids (0 = pass).
std::size_t leakage_count(const std::vector<const Epoch*>& train_side,
                          const std::vector<const Epoch*>& held_out);

void write_report_csv(const ExperimentReport& r, const std::filesystem::path& dest);
void write_report_markdown(const ExperimentReport& r, const std::filesystem::path& dest);

}  // namespace aad
