#include "aad/pipeline.hpp"

#include "aad/augment.hpp"
#include "aad/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aad {
namespace {

const char kRawMagic[4] = {'E', 'A', 'R', 'W'};
constexpr std::uint32_t kRawVersion = 1;
constexpr std::uint32_t kToolVersion = 1;

EpochSet filter_paradigms(EpochSet s, const std::vector<Paradigm>& keep) {
  if (keep.empty()) return s;
  EpochSet out;
  for (Epoch& e : s.epochs)
    if (std::find(keep.begin(), keep.end(), e.paradigm) != keep.end())
      out.push(std::move(e));
  return out;
}

SplitPlan make_plan(const RunConfig& cfg, const EpochSet& original) {
  if (cfg.scheme == SplitScheme::Loso)
    {
      RngStream r(cfg.master_seed, {"split"});
      return make_loso_plan(cfg.synth.n_subjects, r);
    }
  RngStream r(cfg.master_seed, {"split"});
  return make_8fold_plan(original, r, cfg.folds);
}

}  // namespace

void write_provenance(const RunConfig& cfg, const std::filesystem::path& output) {
  std::ofstream os(output.string() + ".provenance.txt");
  os << "tool_version = " << kToolVersion << "\n"
     << "config_hash = " << config_hash(cfg) << "\n"
     << "master_seed = " << cfg.master_seed << "\n"
     << "# config\n"
     << cfg.canonical_text();
}

void write_recording(const ContinuousRecording& r, const std::filesystem::path& dest) {
  std::ofstream os(dest, std::ios::binary);
  if (!os) throw IoError("EARW write: cannot open " + dest.string());
  os.write(kRawMagic, 4);
  os.write(reinterpret_cast<const char*>(&kRawVersion), 4);
  auto put = [&os](const auto& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  put(static_cast<std::uint32_t>(r.subject_id));
  put(static_cast<std::uint8_t>(r.paradigm));
  put(r.fs_hz);
  put(static_cast<std::uint32_t>(r.data.rows()));
  put(static_cast<std::uint64_t>(r.data.cols()));
  put(static_cast<std::uint64_t>(r.events.size()));
  for (const RecordingEvent& ev : r.events) {
    put(static_cast<std::int64_t>(ev.sample_index));
    put(static_cast<std::uint8_t>(ev.label));
    put(static_cast<std::uint32_t>(ev.trial_id));
  }
  for (Eigen::Index c = 0; c < r.data.rows(); ++c)
    os.write(reinterpret_cast<const char*>(r.data.row(c).eval().data()),
             static_cast<std::streamsize>(sizeof(float)) * r.data.cols());
  if (!os) throw IoError("EARW write: write failed");
}

ContinuousRecording read_recording(const std::filesystem::path& source) {
  std::ifstream is(source, std::ios::binary);
  if (!is) throw IoError("EARW read: cannot open " + source.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kRawMagic, 4) != 0)
    throw BadMagicError("EARW read: bad magic");
  auto get = [&is](auto& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw TruncatedError("EARW read: truncated");
  };
  std::uint32_t version;
  get(version);
  if (version != kRawVersion) throw VersionError("EARW read: bad version");

  ContinuousRecording r;
  std::uint32_t subject, channels, trial;
  std::uint8_t paradigm, label;
  std::uint64_t n, n_events;
  std::int64_t sample;
  get(subject);
  get(paradigm);
  get(r.fs_hz);
  get(channels);
  get(n);
  get(n_events);
  r.subject_id = static_cast<int>(subject);
  r.paradigm = static_cast<Paradigm>(paradigm);
  for (std::uint64_t i = 0; i < n_events; ++i) {
    get(sample);
    get(label);
    get(trial);
    r.events.push_back({sample, static_cast<Label>(label), static_cast<int>(trial)});
  }
  r.data.resize(channels, static_cast<Eigen::Index>(n));
  for (std::uint32_t c = 0; c < channels; ++c) {
    Eigen::RowVectorXf row(static_cast<Eigen::Index>(n));
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(float) * n));
    if (!is) throw TruncatedError("EARW read: truncated payload");
    r.data.row(c) = row;
  }
  return r;
}

std::filesystem::path cmd_synth(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  EpochSet s = filter_paradigms(synth_dataset(cfg.synth, cfg.master_seed), cfg.paradigms);
  std::filesystem::path out = cfg.out_dir / "original.eaad";
  write_epochset(s, out);
  write_provenance(cfg, out);
  return out;
}

std::filesystem::path cmd_preprocess(const RunConfig& cfg,
                                     const std::filesystem::path& raw_dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(raw_dir))
    if (entry.path().extension() == ".earw") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("preprocess: no .earw files in " + raw_dir.string());

  std::filesystem::create_directories(cfg.out_dir);
  EpochSet all;
  std::uint64_t base = 0;
  for (const auto& f : files) {
    ContinuousRecording r = read_recording(f);
    PreprocessResult pr = preprocess_recording(r, base << 48);
    all.append(pr.epochs);
    ++base;
  }
  std::filesystem::path out = cfg.out_dir / "preprocessed.eaad";
  write_epochset(all, out);
  write_provenance(cfg, out);
  return out;
}

std::vector<std::filesystem::path> cmd_augment(const RunConfig& cfg) {
  EpochSet original = read_epochset(cfg.out_dir / "original.eaad");
  RngStream rng(cfg.master_seed, {"augment"});
  AugmentedCorpus corpus = build_augmented_corpus(original, rng);

  std::vector<std::filesystem::path> out;
  const std::pair<const EpochSet*, const char*> sets[] = {
      {&corpus.upsampled, "upsampled.eaad"},
      {&corpus.sim0, "sim0.eaad"},
      {&corpus.sim3, "sim3.eaad"},
      {&corpus.sim6, "sim6.eaad"},
  };
  for (const auto& [set, name] : sets) {
    std::filesystem::path p = cfg.out_dir / name;
    write_epochset(*set, p);
    write_provenance(cfg, p);
    out.push_back(p);
  }
  return out;
}

std::filesystem::path cmd_train_eval(const RunConfig& cfg) {
  EpochSet original = read_epochset(cfg.out_dir / "original.eaad");
  SplitPlan plan = make_plan(cfg, original);

  ExperimentConfig ec;
  ec.train = cfg.train;
  ec.variants = cfg.variants;
  ec.model = cfg.model;
  RngStream rng(cfg.master_seed, {"experiment"});
  ExperimentReport report = run_experiment(original, plan, ec, rng);

  std::filesystem::path csv = cfg.out_dir / "report.csv";
  write_report_csv(report, csv);
  write_report_markdown(report, cfg.out_dir / "report.md");
  write_provenance(cfg, csv);
  return csv;
}

namespace {

struct CsvRow {
  int fold;
  std::string variant;
  std::string paradigm;
  double acc;
};

std::vector<CsvRow> read_report_rows(const std::filesystem::path& csv) {
  std::ifstream is(csv);
  if (!is) throw IoError("cannot open report " + csv.string());
  std::vector<CsvRow> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    CsvRow r;
    std::string fold, acc;
    std::getline(ls, fold, ',');
    std::getline(ls, r.variant, ',');
    std::getline(ls, r.paradigm, ',');
    std::getline(ls, acc, ',');
    r.fold = std::stoi(fold);
    r.acc = std::stod(acc);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::vector<std::pair<std::string, double>> cmd_compare(
    const RunConfig& cfg, const std::filesystem::path& report_csv,
    const std::string& variant_hi, const std::string& variant_lo) {
  std::vector<CsvRow> rows = read_report_rows(report_csv);
  std::set<std::string> paradigms;
  for (const CsvRow& r : rows) paradigms.insert(r.paradigm);

  std::vector<std::pair<std::string, double>> out;
  for (const std::string& p : paradigms) {
    std::map<int, double> hi, lo;
    for (const CsvRow& r : rows) {
      if (r.paradigm != p) continue;
      if (r.variant == variant_hi) hi[r.fold] = r.acc;
      if (r.variant == variant_lo) lo[r.fold] = r.acc;
    }
    if (hi.size() != lo.size() || hi.size() < 2) continue;
    std::vector<double> a, b;
    for (auto& [fold, acc] : hi) {
      a.push_back(acc);
      b.push_back(lo.at(fold));
    }
    RngStream rng(cfg.master_seed, {"compare", variant_hi + ">" + variant_lo, p});
    out.emplace_back(p, paired_permutation_test(a, b, rng));
  }

  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path dest = cfg.out_dir / "compare.csv";
  std::ofstream os(dest);
  os << "paradigm,comparison,p_value\n";
  char buf[32];
  for (const auto& [p, pv] : out) {
    std::snprintf(buf, sizeof buf, "%.6g", pv);
    os << p << "," << variant_hi << ">" << variant_lo << "," << buf << "\n";
  }
  write_provenance(cfg, dest);
  return out;
}

std::filesystem::path cmd_report(const RunConfig& cfg,
                                 const std::vector<std::filesystem::path>& reports) {
  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path dest = cfg.out_dir / "summary.md";
  std::ofstream os(dest);
  os << "# Experiment summary\n";
  char buf[96];
  for (const auto& csv : reports) {
    os << "\n## " << csv.filename().string() << "\n\n";
    std::vector<CsvRow> rows = read_report_rows(csv);
    std::set<std::string> variants, paradigms;
    for (const CsvRow& r : rows) {
      variants.insert(r.variant);
      paradigms.insert(r.paradigm);
    }
    os << "| variant |";
    for (const auto& p : paradigms) os << " " << p << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < paradigms.size(); ++i) os << "---|";
    os << "\n";
    for (const auto& v : variants) {
      os << "| " << v << " |";
      for (const auto& p : paradigms) {
        double sum = 0.0, sq = 0.0;
        int n = 0;
        for (const CsvRow& r : rows)
          if (r.variant == v && r.paradigm == p) {
            sum += r.acc;
            sq += r.acc * r.acc;
            ++n;
          }
        if (n == 0) {
          os << " - |";
          continue;
        }
        double mean = sum / n;
        double sd = n > 1 ? std::sqrt((sq - n * mean * mean) / (n - 1)) : 0.0;
        std::snprintf(buf, sizeof buf, " %.3f ± %.3f |", mean, sd);
        os << buf;
      }
      os << "\n";
    }
  }
  write_provenance(cfg, dest);
  return dest;
}

}  // namespace aad
