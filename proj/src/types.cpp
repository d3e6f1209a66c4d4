#include "aad/types.hpp"

#include <cmath>

namespace aad {

const char* to_string(Paradigm p) {
  switch (p) {
    case Paradigm::P1: return "P1";
    case Paradigm::P2: return "P2";
    case Paradigm::P3: return "P3";
  }
  return "?";
}

const char* to_string(Label l) {
  return l == Label::Attended ? "attended" : "unattended";
}

const char* to_string(Origin o) {
  switch (o) {
    case Origin::Experimental: return "experimental";
    case Origin::UpsampledAvg: return "upsampled_avg";
    case Origin::Simulated0dB: return "simulated_0db";
    case Origin::Simulated3dB: return "simulated_3db";
    case Origin::Simulated6dB: return "simulated_6db";
  }
  return "?";
}

ValidationResult validate_epoch(const Epoch& e) {
  ValidationResult r;
  if (e.channels() != kChannels) r.violations.push_back("channel count");
  if (e.samples() != kEpochSamples) r.violations.push_back("sample count");
  if (e.subject_id < 1 || e.subject_id > 24) r.violations.push_back("subject id range");
  if (e.fs_hz != kFsHz) r.violations.push_back("sampling rate");
  if (e.t_min_s != kTMinS) r.violations.push_back("epoch start");
  if (!e.data.allFinite()) r.violations.push_back("finite data");
  return r;
}

void EpochSet::push(Epoch e) {
  manifest[{e.subject_id, e.paradigm, e.label, e.origin}]++;
  epochs.push_back(std::move(e));
}

void EpochSet::append(const EpochSet& other) {
  epochs.reserve(epochs.size() + other.epochs.size());
  for (const Epoch& e : other.epochs) push(e);
}

Manifest EpochSet::recount() const {
  Manifest m;
  for (const Epoch& e : epochs) m[{e.subject_id, e.paradigm, e.label, e.origin}]++;
  return m;
}

CountTable class_counts(const EpochSet& s, std::optional<Paradigm> paradigm,
                        std::optional<Label> label, std::optional<Origin> origin) {
  CountTable t;
  for (const Epoch& e : s.epochs) {
    if (paradigm && e.paradigm != *paradigm) continue;
    if (label && e.label != *label) continue;
    if (origin && e.origin != *origin) continue;
    t.per_subject[e.subject_id]++;
    t.total++;
  }
  return t;
}

}  // namespace aad
