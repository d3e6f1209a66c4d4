// aadpipe: command-line front end for the event-AAD toolkit.
//
// Stages write their outputs (plus a .provenance.txt sidecar) under the
// configured output directory, so a full run is:
//
//   aadpipe synth --config run.cfg
//   aadpipe augment --config run.cfg
//   aadpipe train-eval --config run.cfg
//   aadpipe compare --config run.cfg --hi augmented --lo original

#include "aad/config.hpp"
#include "aad/io.hpp"
#include "aad/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "run configuration file");
  sub->add_option("--seed", o.seed, "override master seed");
  sub->add_option("--out", o.out_dir, "override output directory");
  sub->add_option("--jobs", o.jobs, "worker count hint");
}

aad::RunConfig resolve(const CommonOpts& o) {
  aad::RunConfig cfg =
      o.config_path.empty() ? aad::RunConfig{} : aad::load_config(o.config_path);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.jobs) cfg.jobs = *o.jobs;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-locked auditory attention decoding pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string raw_dir;
  std::string report_csv = "";
  std::string hi = "augmented", lo = "original";
  std::vector<std::string> report_inputs;

  CLI::App* synth = app.add_subcommand("synth", "generate the surrogate epoch corpus");
  add_common(synth, opts);

  CLI::App* prep =
      app.add_subcommand("preprocess", "filter, resample and epoch raw recordings");
  add_common(prep, opts);
  prep->add_option("--raw-dir", raw_dir, "directory of .earw recordings")->required();

  CLI::App* aug = app.add_subcommand("augment", "build the augmented corpus");
  add_common(aug, opts);

  CLI::App* tre = app.add_subcommand("train-eval", "run the configured experiment");
  add_common(tre, opts);

  CLI::App* cmp = app.add_subcommand("compare", "paired permutation test between variants");
  add_common(cmp, opts);
  cmp->add_option("--report", report_csv, "report CSV (default: <out>/report.csv)");
  cmp->add_option("--hi", hi, "variant expected to score higher");
  cmp->add_option("--lo", lo, "variant expected to score lower");

  CLI::App* rep = app.add_subcommand("report", "merge report CSVs into a summary");
  add_common(rep, opts);
  rep->add_option("--input", report_inputs, "report CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    aad::RunConfig cfg = resolve(opts);
    if (synth->parsed()) {
      auto out = aad::cmd_synth(cfg);
      std::printf("wrote %s\n", out.string().c_str());
    } else if (prep->parsed()) {
      auto out = aad::cmd_preprocess(cfg, raw_dir);
      std::printf("wrote %s\n", out.string().c_str());
    } else if (aug->parsed()) {
      for (const auto& p : aad::cmd_augment(cfg))
        std::printf("wrote %s\n", p.string().c_str());
    } else if (tre->parsed()) {
      auto out = aad::cmd_train_eval(cfg);
      std::printf("wrote %s\n", out.string().c_str());
    } else if (cmp->parsed()) {
      std::filesystem::path csv =
          report_csv.empty() ? cfg.out_dir / "report.csv" : std::filesystem::path(report_csv);
      for (const auto& [paradigm, p] : aad::cmd_compare(cfg, csv, hi, lo))
        std::printf("%s  %s > %s  p = %.6g\n", paradigm.c_str(), hi.c_str(), lo.c_str(), p);
    } else if (rep->parsed()) {
      std::vector<std::filesystem::path> inputs(report_inputs.begin(), report_inputs.end());
      auto out = aad::cmd_report(cfg, inputs);
      std::printf("wrote %s\n", out.string().c_str());
    }
  } catch (const aad::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const aad::EvalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const aad::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
