#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "labels.hpp"

namespace ecqed {

// Error taxonomy; each maps to one process exit code at the CLI boundary.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : Error {      // exit 1
  using Error::Error;
};
struct ConfigError : Error {    // exit 2
  using Error::Error;
};
struct NumericError : Error {   // exit 3
  using Error::Error;
};
struct ArtifactError : Error {  // exit 4
  using Error::Error;
};

struct Utterance {
  int index = 0;  // 1-based position in the dialog
  std::string speaker;
  std::string text;
  std::optional<EmotionType> emotion;  // nullopt = neutral

  bool neutral() const { return !emotion.has_value(); }
};

struct Quadruple {
  int emotion_idx = 0;  // 1-based
  int cause_idx = 0;    // 1-based; cause_idx <= emotion_idx
  EmotionType emotion_type = EmotionType::anger;
  CauseType cause_type = CauseType::hybrid;

  auto operator<=>(const Quadruple&) const = default;
};

using QuadrupleSet = std::set<Quadruple>;

struct Dialog {
  std::string dialog_id;
  Split split = Split::train;
  std::vector<Utterance> utterances;
  QuadrupleSet quadruples;

  int size() const { return static_cast<int>(utterances.size()); }
};

struct ValidationIssue {
  std::string code;      // e.g. "dangling_index", "label_mismatch"
  std::string location;  // dialog id plus offending element
  std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

// Counters accumulated while adapting source records into Dialogs.
struct ParseCounters {
  long dropped_forward_cause = 0;  // cause annotated after its emotion
  long duplicate_triple = 0;       // repeated (emotion, cause, emotion_type)
  long skipped_latent_cause = 0;   // evidence not tied to an utterance

  ParseCounters& operator+=(const ParseCounters& o) {
    dropped_forward_cause += o.dropped_forward_cause;
    duplicate_triple += o.duplicate_triple;
    skipped_latent_cause += o.skipped_latent_cause;
    return *this;
  }
};

struct CorpusStats {
  std::array<long, kNumSplits> conversations{};
  std::array<long, kNumSplits> utterances{};
  std::array<long, kNumSplits> quadruples{};
  std::array<long, kNumEmotions> emotion_type_counts{};
  std::array<long, kNumCauseTypes> cause_type_counts{};
  double overlap_dialog_ratio = 0.0;  // dialogs with >=1 overlapped quadruple
  std::map<int, long> distance_histogram;
  ParseCounters parse_counters;

  long total_quadruples() const {
    return quadruples[0] + quadruples[1] + quadruples[2];
  }
};

}  // namespace ecqed
