#pragma once

#include "aad/config.hpp"
#include "aad/dsp.hpp"

#include <filesystem>

namespace aad {

/// Raw continuous-recording container ("EARW"), the ingestion format
/// the preprocess stage consumes.
void write_recording(const ContinuousRecording& r, const std::filesystem::path& dest);
ContinuousRecording read_recording(const std::filesystem::path& source);

/// Stage commands behind the CLI subcommands. Each writes its outputs
/// under cfg.out_dir plus a provenance record (config hash + seed).
/// All are deterministic given (config, seed).

/// Writes original.eaad.
std::filesystem::path cmd_synth(const RunConfig& cfg);

/// Preprocesses every *.earw in raw_dir into preprocessed.eaad.
std::filesystem::path cmd_preprocess(const RunConfig& cfg,
                                     const std::filesystem::path& raw_dir);

/// Reads original.eaad, writes upsampled/sim0/sim3/sim6 .eaad files.
std::vector<std::filesystem::path> cmd_augment(const RunConfig& cfg);

/// Reads original.eaad, runs the configured experiment, writes
/// report.csv and report.md.
std::filesystem::path cmd_train_eval(const RunConfig& cfg);

/// Reads fold accuracies for two variants from a report CSV and writes
/// a p-value table (compare.csv). Returns the p-values by paradigm.
std::vector<std::pair<std::string, double>> cmd_compare(
    const RunConfig& cfg, const std::filesystem::path& report_csv,
    const std::string& variant_hi, const std::string& variant_lo);

/// Merges report CSVs into a single Markdown summary (summary.md).
std::filesystem::path cmd_report(const RunConfig& cfg,
                                 const std::vector<std::filesystem::path>& reports);

void write_provenance(const RunConfig& cfg, const std::filesystem::path& output);

}  // namespace aad
