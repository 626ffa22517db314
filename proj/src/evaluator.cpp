#include "evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

namespace ecqed {

namespace {

const QuadrupleSet& prediction_for(const PredictionMap& pred,
                                   const Dialog& dialog) {
  const auto it = pred.find(dialog.dialog_id);
  if (it == pred.end()) {
    throw DataError("no prediction for dialog '" + dialog.dialog_id + "'");
  }
  return it->second;
}

void check_alignment(const PredictionMap& pred, const Corpus& gold) {
  std::set<std::string> gold_ids;
  for (const Dialog& d : gold) gold_ids.insert(d.dialog_id);
  for (const auto& [id, quads] : pred) {
    (void)quads;
    if (gold_ids.count(id) == 0) {
      throw DataError("prediction for unknown dialog '" + id + "'");
    }
  }
}

// Micro counts over any per-dialog projection of the quadruple sets.
template <typename Project>
PRF micro_counts(const PredictionMap& pred, const Corpus& gold,
                 Project project) {
  check_alignment(pred, gold);
  long tp = 0, pred_count = 0, gold_count = 0;
  for (const Dialog& d : gold) {
    const auto p = project(prediction_for(pred, d));
    const auto g = project(d.quadruples);
    pred_count += static_cast<long>(p.size());
    gold_count += static_cast<long>(g.size());
    for (const auto& item : p) tp += g.count(item) ? 1 : 0;
  }
  return compute_prf(tp, pred_count, gold_count);
}

}  // namespace

PRF compute_prf(long tp, long pred_count, long gold_count) {
  PRF r;
  r.tp = tp;
  r.pred_count = pred_count;
  r.gold_count = gold_count;
  r.precision = pred_count > 0 ? static_cast<double>(tp) / pred_count : 0.0;
  r.recall = gold_count > 0 ? static_cast<double>(tp) / gold_count : 0.0;
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  return r;
}

PRF evaluate_quadruples(const PredictionMap& pred, const Corpus& gold) {
  return micro_counts(pred, gold, [](const QuadrupleSet& qs) { return qs; });
}

PRF evaluate_pairs(const PredictionMap& pred, const Corpus& gold) {
  auto project = [](const QuadrupleSet& qs) {
    std::set<std::pair<int, int>> pairs;
    for (const Quadruple& q : qs) pairs.emplace(q.emotion_idx, q.cause_idx);
    return pairs;
  };
  return micro_counts(pred, gold, project);
}

PRF evaluate_utterance_level(const PredictionMap& pred, const Corpus& gold,
                             Role role) {
  auto project = [role](const QuadrupleSet& qs) {
    std::set<int> indices;
    for (const Quadruple& q : qs) {
      indices.insert(role == Role::emotion ? q.emotion_idx : q.cause_idx);
    }
    return indices;
  };
  return micro_counts(pred, gold, project);
}

PRF evaluate_overlap(const PredictionMap& pred, const Corpus& gold) {
  check_alignment(pred, gold);
  long tp = 0, pred_count = 0, gold_count = 0;
  for (const Dialog& d : gold) {
    const QuadrupleSet overlap_gold = overlapped_quadruples(d.quadruples);
    std::set<int> witness;
    for (const Quadruple& q : overlap_gold) {
      witness.insert(q.emotion_idx);
      witness.insert(q.cause_idx);
    }
    const QuadrupleSet& full_pred = prediction_for(pred, d);
    QuadrupleSet restricted;
    for (const Quadruple& q : full_pred) {
      if (witness.count(q.emotion_idx) || witness.count(q.cause_idx)) {
        restricted.insert(q);
      }
    }
    pred_count += static_cast<long>(restricted.size());
    gold_count += static_cast<long>(overlap_gold.size());
    for (const Quadruple& q : restricted) tp += overlap_gold.count(q) ? 1 : 0;
  }
  return compute_prf(tp, pred_count, gold_count);
}

EvalReport evaluate_all(const PredictionMap& pred, const Corpus& gold) {
  EvalReport report;
  report.quad = evaluate_quadruples(pred, gold);
  report.pair = evaluate_pairs(pred, gold);
  report.emotion = evaluate_utterance_level(pred, gold, Role::emotion);
  report.cause = evaluate_utterance_level(pred, gold, Role::cause);
  report.quad_overlap = evaluate_overlap(pred, gold);
  report.per_dialog.reserve(gold.size());
  for (const Dialog& d : gold) {
    const QuadrupleSet& p = prediction_for(pred, d);
    long tp = 0;
    for (const Quadruple& q : p) tp += d.quadruples.count(q) ? 1 : 0;
    report.per_dialog.push_back(
        {d.dialog_id, compute_prf(tp, static_cast<long>(p.size()),
                                  static_cast<long>(d.quadruples.size()))});
  }
  return report;
}

nlohmann::json prf_to_json(const PRF& prf) {
  return {{"p", prf.precision}, {"r", prf.recall},     {"f1", prf.f1},
          {"tp", prf.tp},       {"pred", prf.pred_count}, {"gold", prf.gold_count}};
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_dialog = nlohmann::json::array();
  for (const DialogEval& de : report.per_dialog) {
    per_dialog.push_back(
        {{"dialog_id", de.dialog_id}, {"quad", prf_to_json(de.quad)}});
  }
  return {{"quad", prf_to_json(report.quad)},
          {"pair", prf_to_json(report.pair)},
          {"emotion", prf_to_json(report.emotion)},
          {"cause", prf_to_json(report.cause)},
          {"quad_overlap", prf_to_json(report.quad_overlap)},
          {"throughput_utterances_per_second", report.throughput_utt_per_s},
          {"per_dialog", per_dialog}};
}

BenchmarkResult run_benchmark(const std::function<void()>& pass,
                              long utterances, int reps) {
  if (reps < 3) reps = 3;
  if (utterances <= 0) throw DataError("benchmark requires a non-empty corpus");
  pass();  // warm-up, untimed
  BenchmarkResult result;
  result.utterances = utterances;
  result.reps = reps;
  for (int i = 0; i < reps; ++i) {
    const auto begin = std::chrono::steady_clock::now();
    pass();
    const auto end = std::chrono::steady_clock::now();
    const double seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(end - begin)
            .count();
    result.rep_utt_per_s.push_back(
        seconds > 0.0 ? static_cast<double>(utterances) / seconds
                      : static_cast<double>(utterances) / 1e-9);
  }
  std::vector<double> sorted = result.rep_utt_per_s;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  result.utt_per_s = sorted.size() % 2 == 1
                         ? sorted[mid]
                         : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return result;
}

}  // namespace ecqed
