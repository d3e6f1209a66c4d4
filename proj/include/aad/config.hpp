#pragma once

#include "aad/eegnet.hpp"
#include "aad/eval.hpp"
#include "aad/synth.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace aad {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything one run needs; defaults are the published
/// hyperparameters with a desk-scale dataset.
struct RunConfig {
  std::uint64_t master_seed = 1;
  std::filesystem::path out_dir = "out";
  int jobs = 1;

  DatasetSynthConfig synth;
  EegNetConfig model;
  TrainConfig train;
  SplitScheme scheme = SplitScheme::EightFold;
  int folds = 8;
  std::vector<Variant> variants{Variant::Original, Variant::Augmented};
  // Paradigms synthesized / used; empty = all three.
  std::vector<Paradigm> paradigms;

  std::string canonical_text() const;
};

/// Sectioned key = value format; unknown sections or keys are hard
/// errors. '#' starts a comment.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace aad
