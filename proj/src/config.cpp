#include "aad/config.hpp"

#include <fstream>
#include <sstream>

namespace aad {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double num(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

int inum(const std::string& v, const std::string& key) {
  double d = num(v, key);
  auto i = static_cast<int>(d);
  if (d != i) throw ConfigError("config: expected integer for " + key);
  return i;
}

std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  for (std::string item; std::getline(is, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string section;
  int lineno = 0;
  for (std::string raw; std::getline(is, raw);) {
    ++lineno;
    std::string line = trim(raw);
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section != "run" && section != "synth" && section != "model" &&
          section != "train" && section != "experiment")
        throw ConfigError("config: unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    std::string qual = section + "." + key;

    if (qual == "run.master_seed") cfg.master_seed = static_cast<std::uint64_t>(num(val, qual));
    else if (qual == "run.out_dir") cfg.out_dir = val;
    else if (qual == "run.jobs") cfg.jobs = inum(val, qual);
    else if (qual == "synth.subjects") cfg.synth.n_subjects = inum(val, qual);
    else if (qual == "synth.count_scale") cfg.synth.count_scale = num(val, qual);
    else if (qual == "synth.epochs_per_trial") cfg.synth.epochs_per_trial = inum(val, qual);
    else if (qual == "synth.snr_db_p1") cfg.synth.snr_db_p1 = num(val, qual);
    else if (qual == "synth.snr_db_p2") cfg.synth.snr_db_p2 = num(val, qual);
    else if (qual == "synth.snr_db_p3") cfg.synth.snr_db_p3 = num(val, qual);
    else if (qual == "synth.noise_rms_uv") cfg.synth.noise.rms_uv = num(val, qual);
    else if (qual == "synth.noise_alpha") cfg.synth.noise.alpha = num(val, qual);
    else if (qual == "model.f1") cfg.model.f1 = inum(val, qual);
    else if (qual == "model.k1") cfg.model.k1 = inum(val, qual);
    else if (qual == "model.depth") cfg.model.depth = inum(val, qual);
    else if (qual == "model.f2") cfg.model.f2 = inum(val, qual);
    else if (qual == "model.k2") cfg.model.k2 = inum(val, qual);
    else if (qual == "model.pool1") cfg.model.pool1 = inum(val, qual);
    else if (qual == "model.pool2") cfg.model.pool2 = inum(val, qual);
    else if (qual == "model.dropout") cfg.model.dropout_p = static_cast<float>(num(val, qual));
    else if (qual == "model.max_norm_depthwise") cfg.model.max_norm_depthwise = num(val, qual);
    else if (qual == "model.max_norm_dense") cfg.model.max_norm_dense = num(val, qual);
    else if (qual == "train.epochs") cfg.train.epochs = inum(val, qual);
    else if (qual == "train.batch_size") cfg.train.batch_size = inum(val, qual);
    else if (qual == "train.lr") cfg.train.lr = static_cast<float>(num(val, qual));
    else if (qual == "experiment.folds") cfg.folds = inum(val, qual);
    else if (qual == "experiment.scheme") {
      if (val == "8fold") cfg.scheme = SplitScheme::EightFold;
      else if (val == "loso") cfg.scheme = SplitScheme::Loso;
      else throw ConfigError("config: scheme must be 8fold or loso");
    } else if (qual == "experiment.variants") {
      cfg.variants.clear();
      for (const std::string& v : split_csv(val)) {
        if (v == "original") cfg.variants.push_back(Variant::Original);
        else if (v == "augmented") cfg.variants.push_back(Variant::Augmented);
        else if (v == "paradigm_specific") cfg.variants.push_back(Variant::ParadigmSpecific);
        else throw ConfigError("config: unknown variant '" + v + "'");
      }
    } else if (qual == "experiment.paradigms") {
      cfg.paradigms.clear();
      for (const std::string& v : split_csv(val)) {
        if (v == "P1") cfg.paradigms.push_back(Paradigm::P1);
        else if (v == "P2") cfg.paradigms.push_back(Paradigm::P2);
        else if (v == "P3") cfg.paradigms.push_back(Paradigm::P3);
        else throw ConfigError("config: unknown paradigm '" + v + "'");
      }
    } else {
      throw ConfigError("config: unknown key '" + qual + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os << "[run]\nmaster_seed = " << master_seed << "\nout_dir = " << out_dir.string()
     << "\njobs = " << jobs << "\n";
  os << "[synth]\nsubjects = " << synth.n_subjects
     << "\ncount_scale = " << synth.count_scale
     << "\nepochs_per_trial = " << synth.epochs_per_trial
     << "\nsnr_db_p1 = " << synth.snr_db_p1
     << "\nsnr_db_p2 = " << synth.snr_db_p2 << "\nsnr_db_p3 = " << synth.snr_db_p3
     << "\nnoise_rms_uv = " << synth.noise.rms_uv
     << "\nnoise_alpha = " << synth.noise.alpha << "\n";
  os << "[model]\nf1 = " << model.f1 << "\nk1 = " << model.k1
     << "\ndepth = " << model.depth << "\nf2 = " << model.f2 << "\nk2 = " << model.k2
     << "\npool1 = " << model.pool1 << "\npool2 = " << model.pool2
     << "\ndropout = " << model.dropout_p
     << "\nmax_norm_depthwise = " << model.max_norm_depthwise
     << "\nmax_norm_dense = " << model.max_norm_dense << "\n";
  os << "[train]\nepochs = " << train.epochs << "\nbatch_size = " << train.batch_size
     << "\nlr = " << train.lr << "\n";
  os << "[experiment]\nscheme = " << (scheme == SplitScheme::EightFold ? "8fold" : "loso")
     << "\nfolds = " << folds << "\nvariants = ";
  for (std::size_t i = 0; i < variants.size(); ++i)
    os << (i ? "," : "") << to_string(variants[i]);
  os << "\nparadigms = ";
  for (std::size_t i = 0; i < paradigms.size(); ++i)
    os << (i ? "," : "") << to_string(paradigms[i]);
  os << "\n";
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace aad
