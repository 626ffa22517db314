#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "evaluator.hpp"

using namespace ecqed;
using nlohmann::json;

namespace {

const std::filesystem::path kFixtures = FIXTURES_DIR;

Dialog dialog_with(const std::string& id, int n, QuadrupleSet quads) {
  Dialog d;
  d.dialog_id = id;
  d.split = Split::test;
  for (int i = 1; i <= n; ++i) {
    d.utterances.push_back({i, i % 2 ? "A" : "B",
                            "line " + std::to_string(i) + " of " + id,
                            EmotionType::anger});
  }
  d.quadruples = std::move(quads);
  return d;
}

// The frozen six-turn reference dialog and the two stored ablation outputs.
QuadrupleSet case1_gold() {
  return {{1, 1, EmotionType::surprise, CauseType::no_context},
          {2, 1, EmotionType::sadness, CauseType::inter_personal},
          {3, 2, EmotionType::anger, CauseType::inter_personal},
          {5, 3, EmotionType::anger, CauseType::hybrid},
          {6, 4, EmotionType::sadness, CauseType::self_contagion}};
}

QuadrupleSet sshg_off_preds() {
  return {{1, 1, EmotionType::anger, CauseType::no_context},
          {2, 1, EmotionType::sadness, CauseType::inter_personal},
          {3, 2, EmotionType::anger, CauseType::inter_personal},
          {5, 3, EmotionType::anger, CauseType::self_contagion},
          {6, 4, EmotionType::sadness, CauseType::self_contagion}};
}

QuadrupleSet parallel_off_preds() {
  return {{2, 1, EmotionType::sadness, CauseType::inter_personal},
          {3, 2, EmotionType::anger, CauseType::inter_personal},
          {5, 4, EmotionType::sadness, CauseType::inter_personal}};
}

}  // namespace

TEST_CASE("compute_prf conventions") {
  const PRF empty = compute_prf(0, 0, 5);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);

  const PRF no_gold = compute_prf(0, 4, 0);
  CHECK(no_gold.precision == 0.0);
  CHECK(no_gold.recall == 0.0);
  CHECK(no_gold.f1 == 0.0);

  const PRF perfect = compute_prf(3, 3, 3);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const PRF mixed = compute_prf(2, 4, 5);
  CHECK(mixed.precision == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mixed.recall == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(mixed.f1 == doctest::Approx(0.4 / 0.9).epsilon(1e-12));
  CHECK(mixed.tp == 2);
  CHECK(mixed.pred_count == 4);
  CHECK(mixed.gold_count == 5);
}

TEST_CASE("micro aggregation across dialogs") {
  Corpus gold;
  gold.push_back(dialog_with(
      "d1", 2,
      {{1, 1, EmotionType::happiness, CauseType::no_context},
       {2, 2, EmotionType::sadness, CauseType::inter_personal}}));
  gold.push_back(dialog_with(
      "d2", 3,
      {{1, 1, EmotionType::anger, CauseType::no_context},
       {2, 1, EmotionType::anger, CauseType::inter_personal},
       {3, 3, EmotionType::fear, CauseType::no_context}}));

  PredictionMap pred;
  pred["d1"] = {{1, 1, EmotionType::happiness, CauseType::no_context},
                {2, 2, EmotionType::sadness, CauseType::self_contagion}};
  pred["d2"] = {{2, 1, EmotionType::anger, CauseType::inter_personal},
                {3, 3, EmotionType::fear, CauseType::no_context}};

  const PRF quad = evaluate_quadruples(pred, gold);
  CHECK(quad.tp == 3);
  CHECK(quad.pred_count == 4);
  CHECK(quad.gold_count == 5);
  CHECK(quad.precision == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(quad.recall == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(quad.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const PRF pair = evaluate_pairs(pred, gold);
  CHECK(pair.tp == 4);
  CHECK(pair.pred_count == 4);
  CHECK(pair.gold_count == 5);
  CHECK(pair.f1 == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("pair projection deduplicates per dialog") {
  Corpus gold;
  gold.push_back(dialog_with(
      "d", 2,
      {{2, 1, EmotionType::sadness, CauseType::inter_personal},
       {2, 1, EmotionType::anger, CauseType::self_contagion}}));
  PredictionMap pred;
  pred["d"] = {{2, 1, EmotionType::happiness, CauseType::hybrid}};

  const PRF pair = evaluate_pairs(pred, gold);
  CHECK(pair.gold_count == 1);
  CHECK(pair.pred_count == 1);
  CHECK(pair.tp == 1);
  CHECK(pair.f1 == 1.0);
}

TEST_CASE("utterance-level projections") {
  Corpus gold;
  gold.push_back(dialog_with(
      "d", 2,
      {{1, 1, EmotionType::happiness, CauseType::no_context},
       {2, 1, EmotionType::sadness, CauseType::inter_personal},
       {2, 2, EmotionType::sadness, CauseType::self_contagion}}));
  PredictionMap pred;
  pred["d"] = {{2, 2, EmotionType::happiness, CauseType::hybrid}};

  const PRF emo = evaluate_utterance_level(pred, gold, Role::emotion);
  CHECK(emo.gold_count == 2);  // emotion utterances {1, 2}
  CHECK(emo.pred_count == 1);
  CHECK(emo.tp == 1);
  CHECK(emo.precision == 1.0);
  CHECK(emo.recall == doctest::Approx(0.5).epsilon(1e-12));

  const PRF cause = evaluate_utterance_level(pred, gold, Role::cause);
  CHECK(cause.gold_count == 2);  // cause utterances {1, 2}
  CHECK(cause.tp == 1);
}

TEST_CASE("overlap evaluation restricts both sides") {
  Corpus gold;
  {
    Dialog d = dialog_with("case_1", 6, case1_gold());
    gold.push_back(d);
  }
  PredictionMap pred;
  pred["case_1"] = sshg_off_preds();

  // overlapped gold: (1,1) and (2,1) share the cause utterance; witness
  // indices {1, 2} keep three of the five predictions, one of which matches.
  const PRF ov = evaluate_overlap(pred, gold);
  CHECK(ov.gold_count == 2);
  CHECK(ov.pred_count == 3);
  CHECK(ov.tp == 1);
  CHECK(ov.precision == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ov.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ov.f1 == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("overlap with no overlapped gold is all zero") {
  Corpus gold;
  gold.push_back(dialog_with(
      "solo", 3,
      {{1, 1, EmotionType::happiness, CauseType::no_context},
       {3, 2, EmotionType::anger, CauseType::inter_personal}}));
  PredictionMap pred;
  pred["solo"] = gold[0].quadruples;
  const PRF ov = evaluate_overlap(pred, gold);
  CHECK(ov.gold_count == 0);
  CHECK(ov.pred_count == 0);
  CHECK(ov.f1 == 0.0);
}

TEST_CASE("reference dialog metrics from the bundled fixture") {
  const Corpus gold = read_ndjson(kFixtures / "refdialog" / "case1.ndjson");
  REQUIRE(gold.size() == 1);
  REQUIRE(gold[0].dialog_id == "case_1");
  REQUIRE(gold[0].quadruples == case1_gold());

  PredictionMap sshg_off;
  sshg_off["case_1"] = sshg_off_preds();
  const PRF quad = evaluate_quadruples(sshg_off, gold);
  CHECK(quad.precision == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(quad.recall == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(quad.f1 == doctest::Approx(0.6).epsilon(1e-9));

  PredictionMap par_off;
  par_off["case_1"] = parallel_off_preds();
  const PRF pair = evaluate_pairs(par_off, gold);
  CHECK(pair.tp == 2);
  CHECK(pair.f1 == doctest::Approx(0.5).epsilon(1e-9));

  // gold echoed back scores 1.0 on the plain metrics; the overlap metric
  // keeps every witness-adjacent prediction, so the three restricted
  // predictions against two overlapped gold quadruples give P=2/3, R=1.
  PredictionMap echo;
  echo["case_1"] = gold[0].quadruples;
  const EvalReport report = evaluate_all(echo, gold);
  CHECK(report.quad.f1 == 1.0);
  CHECK(report.pair.f1 == 1.0);
  CHECK(report.emotion.f1 == 1.0);
  CHECK(report.cause.f1 == 1.0);
  CHECK(report.quad_overlap.tp == 2);
  CHECK(report.quad_overlap.pred_count == 3);
  CHECK(report.quad_overlap.gold_count == 2);
  CHECK(report.quad_overlap.f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("prediction map must cover exactly the gold dialogs") {
  Corpus gold;
  gold.push_back(dialog_with(
      "a", 1, {{1, 1, EmotionType::anger, CauseType::no_context}}));
  gold.push_back(dialog_with(
      "b", 1, {{1, 1, EmotionType::fear, CauseType::no_context}}));

  PredictionMap missing;
  missing["a"] = gold[0].quadruples;
  CHECK_THROWS_AS(evaluate_quadruples(missing, gold), DataError);

  PredictionMap extra;
  extra["a"] = gold[0].quadruples;
  extra["b"] = gold[1].quadruples;
  extra["c"] = {};
  CHECK_THROWS_AS(evaluate_quadruples(extra, gold), DataError);

  // empty sets are fine as long as the keys line up
  PredictionMap silent;
  silent["a"] = {};
  silent["b"] = {};
  const PRF quad = evaluate_quadruples(silent, gold);
  CHECK(quad.precision == 0.0);
  CHECK(quad.gold_count == 2);
}

TEST_CASE("report JSON uses the pinned key set") {
  Corpus gold;
  gold.push_back(dialog_with(
      "d1", 2, {{2, 1, EmotionType::sadness, CauseType::inter_personal}}));
  PredictionMap pred;
  pred["d1"] = gold[0].quadruples;

  EvalReport report = evaluate_all(pred, gold);
  report.throughput_utt_per_s = 123.5;
  const json j = report_to_json(report);

  REQUIRE(j.is_object());
  CHECK(j.size() == 7);
  for (const char* key :
       {"quad", "pair", "emotion", "cause", "quad_overlap"}) {
    REQUIRE(j.contains(key));
    const json& prf = j.at(key);
    CHECK(prf.size() == 6);
    for (const char* f : {"p", "r", "f1"}) {
      REQUIRE(prf.contains(f));
      CHECK(prf.at(f).is_number());
    }
    for (const char* f : {"tp", "pred", "gold"}) {
      REQUIRE(prf.contains(f));
      CHECK(prf.at(f).is_number_integer());
    }
  }
  CHECK(j.at("throughput_utterances_per_second") == 123.5);
  REQUIRE(j.at("per_dialog").is_array());
  REQUIRE(j.at("per_dialog").size() == 1);
  CHECK(j.at("per_dialog")[0].at("dialog_id") == "d1");
  CHECK(j.at("per_dialog")[0].at("quad").at("f1") == 1.0);

  CHECK(prf_to_json(report.quad).at("f1") == 1.0);
}

TEST_CASE("per-dialog breakdown follows corpus order") {
  Corpus gold;
  gold.push_back(dialog_with(
      "z_last", 1, {{1, 1, EmotionType::anger, CauseType::no_context}}));
  gold.push_back(dialog_with(
      "a_first", 1, {{1, 1, EmotionType::fear, CauseType::no_context}}));
  PredictionMap pred;
  pred["z_last"] = gold[0].quadruples;
  pred["a_first"] = {};

  const EvalReport report = evaluate_all(pred, gold);
  REQUIRE(report.per_dialog.size() == 2);
  CHECK(report.per_dialog[0].dialog_id == "z_last");
  CHECK(report.per_dialog[0].quad.f1 == 1.0);
  CHECK(report.per_dialog[1].dialog_id == "a_first");
  CHECK(report.per_dialog[1].quad.f1 == 0.0);
}

TEST_CASE("run_benchmark timing harness") {
  std::atomic<long> calls{0};
  const auto pass = [&] {
    volatile double x = 0.0;
    for (int i = 0; i < 2000; ++i) x = x + static_cast<double>(i);
    ++calls;
  };

  const BenchmarkResult r = run_benchmark(pass, 100, 4);
  CHECK(r.utt_per_s > 0.0);
  CHECK(r.reps == 4);
  CHECK(r.rep_utt_per_s.size() == 4);
  CHECK(r.utterances == 100);
  CHECK(calls.load() == 5);  // warm-up plus four timed repetitions

  // fewer than three repetitions are rounded up
  calls = 0;
  const BenchmarkResult floor = run_benchmark(pass, 10, 1);
  CHECK(floor.reps == 3);
  CHECK(floor.rep_utt_per_s.size() == 3);
  CHECK(calls.load() == 4);
}
