#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "corpus.hpp"

namespace ecqed {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0;
  long pred_count = 0;
  long gold_count = 0;
};

// Micro-average counts -> P/R/F1 with the zero conventions: P = 0 when
// nothing was predicted, R = 0 when there is no gold, F1 = 0 when P + R = 0.
PRF compute_prf(long tp, long pred_count, long gold_count);

struct DialogEval {
  std::string dialog_id;
  PRF quad;
};

struct EvalReport {
  PRF quad;
  PRF pair;
  PRF emotion;
  PRF cause;
  PRF quad_overlap;
  double throughput_utt_per_s = 0.0;  // 0 = not measured
  std::vector<DialogEval> per_dialog;
};

// Predictions keyed by dialog id; must cover exactly the gold dialogs.
using PredictionMap = std::map<std::string, QuadrupleSet>;

PRF evaluate_quadruples(const PredictionMap& pred, const Corpus& gold);
// Quadruples projected to (emotion_idx, cause_idx), deduplicated per dialog.
PRF evaluate_pairs(const PredictionMap& pred, const Corpus& gold);

enum class Role { emotion, cause };
// Projection to one utterance index per quadruple, deduplicated per dialog.
PRF evaluate_utterance_level(const PredictionMap& pred, const Corpus& gold,
                             Role role);

// Gold restricted to overlapped quadruples; predictions restricted to those
// touching an utterance index that appears in the overlapped gold set.
PRF evaluate_overlap(const PredictionMap& pred, const Corpus& gold);

EvalReport evaluate_all(const PredictionMap& pred, const Corpus& gold);
nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json prf_to_json(const PRF& prf);

struct BenchmarkResult {
  double utt_per_s = 0.0;  // median across repetitions
  std::vector<double> rep_utt_per_s;
  long utterances = 0;
  int reps = 0;
};

// Times `pass` (one full-corpus prediction sweep) reps times after a single
// untimed warm-up and reports the median utterances/second.
BenchmarkResult run_benchmark(const std::function<void()>& pass,
                              long utterances, int reps = 3);

}  // namespace ecqed
