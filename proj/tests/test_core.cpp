#include "aad/config.hpp"
#include "aad/io.hpp"
#include "aad/rng.hpp"
#include "aad/types.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace aad;

namespace {

Epoch make_epoch(int subject = 1, Paradigm p = Paradigm::P1,
                 Label l = Label::Attended, int trial = 0, std::uint64_t id = 0) {
  Epoch e;
  e.id = id;
  e.subject_id = subject;
  e.paradigm = p;
  e.trial_id = trial;
  e.label = l;
  e.data = Eigen::MatrixXf::Constant(kChannels, kEpochSamples, 1.5f);
  return e;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("aad_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("validate_epoch accepts a well-formed epoch") {
  CHECK(validate_epoch(make_epoch()).ok());
}

TEST_CASE("validate_epoch flags wrong channel count") {
  Epoch e = make_epoch();
  e.data = Eigen::MatrixXf::Zero(kChannels - 1, kEpochSamples);
  auto r = validate_epoch(e);
  CHECK_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    if (v.find("channel") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate_epoch flags non-finite samples") {
  Epoch e = make_epoch();
  e.data(3, 100) = std::numeric_limits<float>::quiet_NaN();
  auto r = validate_epoch(e);
  CHECK_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    if (v.find("finite") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate_epoch flags subject id out of range") {
  Epoch e = make_epoch(25);
  CHECK_FALSE(validate_epoch(e).ok());
}

TEST_CASE("EpochSet manifest tracks pushes and appends") {
  EpochSet s;
  s.push(make_epoch(1, Paradigm::P1, Label::Attended));
  s.push(make_epoch(1, Paradigm::P1, Label::Unattended));
  s.push(make_epoch(2, Paradigm::P2, Label::Unattended));
  CHECK(s.manifest_consistent());
  CHECK(s.manifest.at({1, Paradigm::P1, Label::Attended, Origin::Experimental}) == 1);

  EpochSet t;
  t.push(make_epoch(2, Paradigm::P2, Label::Unattended));
  s.append(t);
  CHECK(s.size() == 4);
  CHECK(s.manifest_consistent());
  CHECK(s.manifest.at({2, Paradigm::P2, Label::Unattended, Origin::Experimental}) == 2);
}

TEST_CASE("class_counts filters and sums") {
  EpochSet s;
  for (int i = 0; i < 3; ++i) s.push(make_epoch(1, Paradigm::P1, Label::Attended, i));
  for (int i = 0; i < 5; ++i) s.push(make_epoch(2, Paradigm::P1, Label::Unattended, i));
  s.push(make_epoch(2, Paradigm::P2, Label::Attended));

  auto att = class_counts(s, Paradigm::P1, Label::Attended);
  CHECK(att.total == 3);
  CHECK(att.per_subject.at(1) == 3);
  auto un = class_counts(s, Paradigm::P1, Label::Unattended);
  CHECK(un.total == 5);
  CHECK(un.per_subject.at(2) == 5);

  EpochSet empty;
  CHECK(class_counts(empty).total == 0);
}

TEST_CASE("EAAD round-trip is bit-exact") {
  EpochSet s;
  RngStream rng(7, {"test", "io"});
  for (int i = 0; i < 3; ++i) {
    Epoch e = make_epoch(i + 1, Paradigm::P2, i % 2 ? Label::Attended : Label::Unattended,
                         i, 100 + i);
    for (int c = 0; c < kChannels; ++c)
      for (int t = 0; t < kEpochSamples; ++t)
        e.data(c, t) = static_cast<float>(rng.normal());
    e.sources[0] = 42;
    s.push(std::move(e));
  }

  TempDir dir;
  auto file = dir.path / "set.eaad";
  std::uint64_t bytes = write_epochset(s, file);
  CHECK(bytes == std::filesystem::file_size(file));

  EpochSet r = read_epochset(file);
  REQUIRE(r.size() == s.size());
  CHECK(r.manifest == s.manifest);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Epoch &a = s.epochs[i], &b = r.epochs[i];
    CHECK(a.id == b.id);
    CHECK(a.subject_id == b.subject_id);
    CHECK(a.paradigm == b.paradigm);
    CHECK(a.trial_id == b.trial_id);
    CHECK(a.label == b.label);
    CHECK(a.origin == b.origin);
    CHECK(a.sources == b.sources);
    CHECK(std::memcmp(a.data.data(), b.data.data(),
                      sizeof(float) * kChannels * kEpochSamples) == 0);
  }

  // A second write of the re-read set is byte-identical.
  auto file2 = dir.path / "set2.eaad";
  write_epochset(r, file2);
  std::ifstream f1(file, std::ios::binary), f2(file2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("EAAD read rejects corrupted files") {
  EpochSet s;
  s.push(make_epoch());
  TempDir dir;
  auto file = dir.path / "set.eaad";
  write_epochset(s, file);

  SUBCASE("bad magic") {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(read_epochset(file), BadMagicError);
  }
  SUBCASE("truncated payload") {
    auto n = std::filesystem::file_size(file);
    std::filesystem::resize_file(file, n - 100);
    CHECK_THROWS_AS(read_epochset(file), TruncatedError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_epochset(dir.path / "absent.eaad"), IoError);
  }
}

TEST_CASE("RngStream is deterministic per (seed, path)") {
  RngStream a(99, {"x", "y"});
  RngStream b(99, {"x", "y"});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct paths give distinct sequences") {
  RngStream a(99, {"x", "y"});
  RngStream b(99, {"x", "z"});
  RngStream c(100, {"x", "y"});
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 10000; ++i) {
    std::uint32_t va = a.next_u32();
    if (va == b.next_u32()) ++same_ab;
    if (va == c.next_u32()) ++same_ac;
  }
  CHECK(same_ab < 10);
  CHECK(same_ac < 10);
}

TEST_CASE("derive matches explicit path construction") {
  RngStream parent(5, {"a"});
  RngStream child = parent.derive("b");
  RngStream direct(5, {"a", "b"});
  for (int i = 0; i < 100; ++i) CHECK(child.next_u64() == direct.next_u64());
}

TEST_CASE("uniform mean converges to 0.5") {
  RngStream r(12345, {"lln"});
  double sum = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += r.uniform();
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normal has zero mean and unit variance") {
  RngStream r(4242, {"normal"});
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sq += x * x;
  }
  double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("choice draws k distinct indices") {
  RngStream r(7, {"choice"});
  auto full = r.choice(5, 5);
  std::set<std::size_t> uniq(full.begin(), full.end());
  CHECK(uniq == std::set<std::size_t>{0, 1, 2, 3, 4});

  auto part = r.choice(100, 10);
  CHECK(part.size() == 10);
  CHECK(std::set<std::size_t>(part.begin(), part.end()).size() == 10);
  for (auto i : part) CHECK(i < 100);

  CHECK_THROWS(r.choice(3, 4));
}

TEST_CASE("empty rng path is rejected") {
  CHECK_THROWS_AS(RngStream(1, {}), std::invalid_argument);
}

TEST_CASE("config parses, round-trips, and rejects unknowns") {
  const char* text =
      "[run]\n"
      "master_seed = 77\n"
      "# comment\n"
      "[synth]\n"
      "subjects = 4\n"
      "count_scale = 0.125\n"
      "[train]\n"
      "epochs = 12\n"
      "[experiment]\n"
      "scheme = loso\n"
      "variants = original,augmented\n"
      "paradigms = P1,P3\n";
  RunConfig cfg = parse_config_text(text);
  CHECK(cfg.master_seed == 77);
  CHECK(cfg.synth.n_subjects == 4);
  CHECK(cfg.synth.count_scale == doctest::Approx(0.125));
  CHECK(cfg.train.epochs == 12);
  CHECK(cfg.scheme == SplitScheme::Loso);
  CHECK(cfg.paradigms == std::vector<Paradigm>{Paradigm::P1, Paradigm::P3});

  // canonical text re-parses to the same hash
  RunConfig again = parse_config_text(cfg.canonical_text());
  CHECK(config_hash(again) == config_hash(cfg));

  CHECK_THROWS_AS(parse_config_text("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[train]\nepochs = abc\n"), ConfigError);
}
