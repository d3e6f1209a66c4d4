#include "aad/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace aad {
namespace {

const char kMagic[4] = {0x45, 0x41, 0x41, 0x44};  // "EAAD"

// Fixed per-epoch metadata block preceding the float payload.
#pragma pack(push, 1)
struct EpochRecordMeta {
  std::uint64_t id;
  std::uint32_t subject_id;
  std::uint32_t trial_id;
  std::uint8_t paradigm;
  std::uint8_t label;
  std::uint8_t origin;
  std::uint8_t pad;
  float fs_hz;
  float t_min_s;
  std::uint64_t sources[4];
};
#pragma pack(pop)
static_assert(sizeof(EpochRecordMeta) == 8 + 4 + 4 + 4 + 4 + 4 + 32);

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw TruncatedError("EAAD: truncated payload");
}

std::string encode_header(const EpochSet& s) {
  std::ostringstream h;
  h << "schema=epoch_v1\n";
  h << "channels=" << kChannels << "\n";
  h << "samples=" << kEpochSamples << "\n";
  h << "count=" << s.epochs.size() << "\n";
  for (const auto& [key, n] : s.manifest) {
    const auto& [subj, par, lab, orig] = key;
    h << "manifest=" << subj << "," << to_string(par) << "," << to_string(lab)
      << "," << to_string(orig) << "," << n << "\n";
  }
  return h.str();
}

}  // namespace

std::uint64_t write_epochset(const EpochSet& s, const std::filesystem::path& dest) {
  if (!s.manifest_consistent())
    throw ManifestMismatchError("EAAD write: manifest does not match epochs");
  std::ofstream os(dest, std::ios::binary);
  if (!os) throw IoError("EAAD write: cannot open " + dest.string());

  os.write(kMagic, 4);
  put(os, kEaadVersion);
  std::string header = encode_header(s);
  put(os, static_cast<std::uint64_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));

  for (const Epoch& e : s.epochs) {
    EpochRecordMeta m{};
    m.id = e.id;
    m.subject_id = static_cast<std::uint32_t>(e.subject_id);
    m.trial_id = static_cast<std::uint32_t>(e.trial_id);
    m.paradigm = static_cast<std::uint8_t>(e.paradigm);
    m.label = static_cast<std::uint8_t>(e.label);
    m.origin = static_cast<std::uint8_t>(e.origin);
    for (int i = 0; i < 4; ++i) m.sources[i] = e.sources[static_cast<std::size_t>(i)];
    m.fs_hz = e.fs_hz;
    m.t_min_s = e.t_min_s;
    put(os, m);
    // Row-major: channel by channel.
    for (int c = 0; c < e.channels(); ++c)
      os.write(reinterpret_cast<const char*>(e.data.row(c).eval().data()),
               static_cast<std::streamsize>(sizeof(float)) * e.samples());
  }
  os.flush();
  if (!os) throw IoError("EAAD write: write failed for " + dest.string());
  return 4 + 4 + 8 + header.size() +
         s.epochs.size() * (sizeof(EpochRecordMeta) +
                            sizeof(float) * kChannels * kEpochSamples);
}

EpochSet read_epochset(const std::filesystem::path& source) {
  std::ifstream is(source, std::ios::binary);
  if (!is) throw IoError("EAAD read: cannot open " + source.string());

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw BadMagicError("EAAD read: bad magic");
  std::uint32_t version;
  get(is, version);
  if (version != kEaadVersion)
    throw VersionError("EAAD read: unsupported version " + std::to_string(version));
  std::uint64_t header_len;
  get(is, header_len);
  std::string header(header_len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw TruncatedError("EAAD read: truncated header");

  std::uint64_t count = 0;
  std::istringstream hs(header);
  for (std::string line; std::getline(hs, line);) {
    if (line.rfind("count=", 0) == 0) count = std::stoull(line.substr(6));
  }

  EpochSet s;
  s.epochs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EpochRecordMeta m;
    get(is, m);
    Epoch e;
    e.id = m.id;
    e.subject_id = static_cast<int>(m.subject_id);
    e.trial_id = static_cast<int>(m.trial_id);
    e.paradigm = static_cast<Paradigm>(m.paradigm);
    e.label = static_cast<Label>(m.label);
    e.origin = static_cast<Origin>(m.origin);
    e.fs_hz = m.fs_hz;
    e.t_min_s = m.t_min_s;
    for (int k = 0; k < 4; ++k) e.sources[static_cast<std::size_t>(k)] = m.sources[k];
    e.data.resize(kChannels, kEpochSamples);
    for (int c = 0; c < kChannels; ++c) {
      Eigen::RowVectorXf row(kEpochSamples);
      is.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(sizeof(float)) * kEpochSamples);
      if (!is) throw TruncatedError("EAAD read: truncated payload");
      e.data.row(c) = row;
    }
    s.push(std::move(e));
  }

  // Cross-check header manifest lines against what we rebuilt.
  hs.clear();
  hs.seekg(0);
  Manifest declared;
  for (std::string line; std::getline(hs, line);) {
    if (line.rfind("manifest=", 0) != 0) continue;
    std::istringstream ls(line.substr(9));
    std::string subj, par, lab, orig, n;
    std::getline(ls, subj, ',');
    std::getline(ls, par, ',');
    std::getline(ls, lab, ',');
    std::getline(ls, orig, ',');
    std::getline(ls, n, ',');
    Paradigm p = par == "P1" ? Paradigm::P1 : par == "P2" ? Paradigm::P2 : Paradigm::P3;
    Label l = lab == "attended" ? Label::Attended : Label::Unattended;
    Origin o = Origin::Experimental;
    if (orig == "upsampled_avg") o = Origin::UpsampledAvg;
    else if (orig == "simulated_0db") o = Origin::Simulated0dB;
    else if (orig == "simulated_3db") o = Origin::Simulated3dB;
    else if (orig == "simulated_6db") o = Origin::Simulated6dB;
    declared[{std::stoi(subj), p, l, o}] = std::stoull(n);
  }
  if (declared != s.manifest)
    throw ManifestMismatchError("EAAD read: manifest/count mismatch");
  return s;
}

}  // namespace aad
