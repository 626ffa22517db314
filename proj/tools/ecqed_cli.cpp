// Command-line front end. All toolkit work goes through the C API in
// ecqed/ecqed.h; JSON parsing here is presentation only.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "ecqed/ecqed.h"

namespace {

struct CorpusHandle {
  ecqed_corpus* ptr = nullptr;
  ~CorpusHandle() { ecqed_corpus_close(ptr); }
};

struct ModelHandle {
  ecqed_model* ptr = nullptr;
  ~ModelHandle() { ecqed_model_close(ptr); }
};

struct CString {
  char* ptr = nullptr;
  ~CString() { ecqed_free_string(ptr); }
  std::string str() const { return ptr != nullptr ? ptr : ""; }
};

// Print the pending library error; call immediately after the failing call.
int fail(ecqed_status st) {
  std::cerr << "error: " << ecqed_last_error() << "\n";
  return static_cast<int>(st);
}

int usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return static_cast<int>(ECQED_ERR_CONFIG);
}

// Directory -> source ingest; file -> canonical NDJSON.
ecqed_status load_data(ecqed_corpus* corpus, const std::string& data,
                       std::string* failures_json) {
  if (std::filesystem::is_directory(data)) {
    CString failures;
    const ecqed_status st =
        ecqed_corpus_ingest_dir(corpus, data.c_str(), &failures.ptr);
    if (failures_json != nullptr) *failures_json = failures.str();
    return st;
  }
  return ecqed_corpus_read_ndjson(corpus, data.c_str());
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) return false;
  os << content;
  return bool(os);
}

void print_counts(const std::string& stats_json) {
  const auto j = nlohmann::json::parse(stats_json);
  for (const char* split : {"train", "val", "test"}) {
    std::cout << split << ": " << j["conversations"][split].get<long>()
              << " conversations, " << j["utterances"][split].get<long>()
              << " utterances, " << j["quadruples"][split].get<long>()
              << " quadruples\n";
  }
  std::cout << "emotion types:";
  for (const auto& item : j["emotion_type_counts"].items()) {
    std::cout << " " << item.key() << "=" << item.value().get<long>();
  }
  std::cout << "\ncause types:";
  for (const auto& item : j["cause_type_counts"].items()) {
    std::cout << " " << item.key() << "=" << item.value().get<long>();
  }
  std::cout << "\noverlap dialog ratio: "
            << j["overlap_dialog_ratio"].get<double>() << "\n";
}

void print_prf(const char* label, const nlohmann::json& prf) {
  std::cout << label << ": P=" << prf["p"].get<double>()
            << " R=" << prf["r"].get<double>()
            << " F1=" << prf["f1"].get<double>() << "\n";
}

int run_ingest(const std::string& data, const std::string& out,
               bool stats_only) {
  if (out.empty() && !stats_only) {
    return usage_error("ingest needs --out (or --stats-only)");
  }
  CorpusHandle corpus;
  if (ecqed_status st = ecqed_corpus_open(&corpus.ptr); st != ECQED_OK) {
    return fail(st);
  }
  std::string failures_json;
  const ecqed_status ingest_st = load_data(corpus.ptr, data, &failures_json);
  const std::string ingest_error =
      ingest_st != ECQED_OK ? ecqed_last_error() : "";

  int64_t count = 0;
  if (ecqed_status st = ecqed_corpus_dialog_count(corpus.ptr, &count);
      st != ECQED_OK) {
    return fail(st);
  }
  if (ingest_st != ECQED_OK && count == 0) {
    std::cerr << "error: " << ingest_error << "\n";
    return static_cast<int>(ingest_st);
  }

  if (!out.empty()) {
    if (ecqed_status st = ecqed_corpus_write_ndjson(corpus.ptr, out.c_str());
        st != ECQED_OK) {
      return fail(st);
    }
  }
  CString stats;
  if (ecqed_status st = ecqed_corpus_stats_json(corpus.ptr, &stats.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  print_counts(stats.str());

  if (ingest_st != ECQED_OK) {
    if (!failures_json.empty()) {
      for (const auto& msg : nlohmann::json::parse(failures_json)) {
        std::cerr << "rejected: " << msg.get<std::string>() << "\n";
      }
    }
    std::cerr << "error: " << ingest_error << "\n";
    return static_cast<int>(ingest_st);
  }
  return 0;
}

int run_train(const std::string& config_path, const std::string& data,
              const std::string& out, const std::string& log_path,
              int64_t seed, bool one_grid,
              const std::vector<std::string>& ablate) {
  std::string config_text = "{}";
  if (!config_path.empty() && !read_file(config_path, config_text)) {
    return usage_error("cannot open config file '" + config_path + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    return usage_error("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) return usage_error("config root must be a JSON object");
  if (seed >= 0) doc["seed"] = seed;
  if (one_grid) doc["one_grid"] = true;
  for (const std::string& a : ablate) {
    if (a == "sshg") {
      doc["use_sshg"] = false;
    } else if (a == "su") {
      doc["use_su_edges"] = false;
    } else if (a == "du") {
      doc["use_du_edges"] = false;
    } else if (a == "mlp") {
      doc["use_mlp"] = false;
    } else if (a == "biaffine") {
      doc["use_biaffine"] = false;
    } else {
      return usage_error("unknown ablation '" + a +
                         "' (choose from sshg, su, du, mlp, biaffine)");
    }
  }

  CString effective;
  if (ecqed_status st =
          ecqed_config_normalize(doc.dump().c_str(), &effective.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  std::cout << "config: " << effective.str() << "\n";

  CorpusHandle corpus;
  if (ecqed_status st = ecqed_corpus_open(&corpus.ptr); st != ECQED_OK) {
    return fail(st);
  }
  if (ecqed_status st = load_data(corpus.ptr, data, nullptr); st != ECQED_OK) {
    return fail(st);
  }

  const std::string log_file = log_path.empty() ? out + ".log" : log_path;
  ModelHandle model;
  if (ecqed_status st = ecqed_train(corpus.ptr, effective.str().c_str(),
                                    log_file.c_str(), &model.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  if (ecqed_status st = ecqed_model_save(model.ptr, out.c_str());
      st != ECQED_OK) {
    return fail(st);
  }

  CString meta;
  if (ecqed_status st = ecqed_model_metadata_json(model.ptr, &meta.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  const auto metadata = nlohmann::json::parse(meta.str());
  const auto& curve = metadata["val_f1_curve"];
  const int best_epoch = metadata["epoch"].get<int>();
  std::cout << "best epoch " << best_epoch << " (val quad F1 "
            << curve[best_epoch - 1].get<double>() << ")\n";
  std::cout << "final val quad F1 " << curve.back().get<double>() << "\n";
  std::cout << "checkpoint written to " << out << " (log: " << log_file
            << ")\n";
  return 0;
}

int run_evaluate(const std::string& data, const std::string& checkpoint,
                 const std::string& pred_file, bool gold_as_pred,
                 const std::string& out) {
  const int sources =
      (checkpoint.empty() ? 0 : 1) + (pred_file.empty() ? 0 : 1) +
      (gold_as_pred ? 1 : 0);
  if (sources != 1) {
    return usage_error(
        "evaluate needs exactly one of --checkpoint, --pred-file, "
        "--gold-as-pred");
  }
  CorpusHandle corpus;
  if (ecqed_status st = ecqed_corpus_open(&corpus.ptr); st != ECQED_OK) {
    return fail(st);
  }
  if (ecqed_status st = load_data(corpus.ptr, data, nullptr); st != ECQED_OK) {
    return fail(st);
  }

  CString report;
  if (!checkpoint.empty()) {
    ModelHandle model;
    if (ecqed_status st = ecqed_model_open(checkpoint.c_str(), &model.ptr);
        st != ECQED_OK) {
      return fail(st);
    }
    if (ecqed_status st = ecqed_evaluate(model.ptr, corpus.ptr, &report.ptr);
        st != ECQED_OK) {
      return fail(st);
    }
  } else {
    std::string predictions;
    if (!pred_file.empty()) {
      if (!read_file(pred_file, predictions)) {
        std::cerr << "error: cannot open predictions file '" << pred_file
                  << "'\n";
        return static_cast<int>(ECQED_ERR_DATA);
      }
    } else {
      CString gold;
      if (ecqed_status st =
              ecqed_gold_predictions_json(corpus.ptr, &gold.ptr);
          st != ECQED_OK) {
        return fail(st);
      }
      predictions = gold.str();
    }
    if (ecqed_status st = ecqed_evaluate_predictions(
            corpus.ptr, predictions.c_str(), &report.ptr);
        st != ECQED_OK) {
      return fail(st);
    }
  }

  const auto j = nlohmann::json::parse(report.str());
  print_prf("quad", j["quad"]);
  print_prf("pair", j["pair"]);
  print_prf("emotion", j["emotion"]);
  print_prf("cause", j["cause"]);
  print_prf("quad_overlap", j["quad_overlap"]);
  if (!out.empty() && !write_file(out, report.str())) {
    std::cerr << "error: cannot write report to '" << out << "'\n";
    return static_cast<int>(ECQED_ERR_ARTIFACT);
  }
  return 0;
}

int run_predict(const std::string& data, const std::string& checkpoint,
                const std::string& out) {
  CorpusHandle corpus;
  if (ecqed_status st = ecqed_corpus_open(&corpus.ptr); st != ECQED_OK) {
    return fail(st);
  }
  if (ecqed_status st = load_data(corpus.ptr, data, nullptr); st != ECQED_OK) {
    return fail(st);
  }
  ModelHandle model;
  if (ecqed_status st = ecqed_model_open(checkpoint.c_str(), &model.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  CString predictions;
  if (ecqed_status st =
          ecqed_predict_json(model.ptr, corpus.ptr, &predictions.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  if (!write_file(out, predictions.str())) {
    std::cerr << "error: cannot write predictions to '" << out << "'\n";
    return static_cast<int>(ECQED_ERR_ARTIFACT);
  }
  const auto j = nlohmann::json::parse(predictions.str());
  std::size_t total = 0;
  for (const auto& item : j.items()) total += item.value().size();
  std::cout << "predicted " << total << " quadruples across " << j.size()
            << " dialogs -> " << out << "\n";
  return 0;
}

int run_benchmark(const std::string& data,
                  const std::vector<std::string>& checkpoints, int reps,
                  const std::string& out) {
  if (checkpoints.empty() || checkpoints.size() > 2) {
    return usage_error(
        "benchmark needs --checkpoint once (multi-grid) or twice "
        "(multi-grid then one-grid)");
  }
  CorpusHandle corpus;
  if (ecqed_status st = ecqed_corpus_open(&corpus.ptr); st != ECQED_OK) {
    return fail(st);
  }
  if (ecqed_status st = load_data(corpus.ptr, data, nullptr); st != ECQED_OK) {
    return fail(st);
  }
  ModelHandle multi;
  if (ecqed_status st = ecqed_model_open(checkpoints[0].c_str(), &multi.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  ModelHandle one;
  if (checkpoints.size() == 2) {
    if (ecqed_status st = ecqed_model_open(checkpoints[1].c_str(), &one.ptr);
        st != ECQED_OK) {
      return fail(st);
    }
  }
  CString result;
  if (ecqed_status st = ecqed_benchmark(multi.ptr, one.ptr, corpus.ptr, reps,
                                        &result.ptr);
      st != ECQED_OK) {
    return fail(st);
  }
  const auto j = nlohmann::json::parse(result.str());
  std::cout << "multi-grid: " << j["multi"]["utt_per_s"].get<double>()
            << " utterances/s\n";
  if (j.contains("one_grid")) {
    std::cout << "one-grid:   " << j["one_grid"]["utt_per_s"].get<double>()
              << " utterances/s\n";
    std::cout << "ratio (multi/one): "
              << j["ratio_multi_over_one"].get<double>()
              << " (full-scale reference: "
              << j["full_scale_reference_ratio"].get<double>() << ")\n";
  }
  if (!out.empty() && !write_file(out, result.str())) {
    std::cerr << "error: cannot write benchmark report to '" << out << "'\n";
    return static_cast<int>(ECQED_ERR_ARTIFACT);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotion-cause quadruple extraction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ecqed_version());

  std::string data, out, config, checkpoint, pred_file, log_path;
  std::vector<std::string> checkpoints, ablate;
  bool stats_only = false, one_grid = false, gold_as_pred = false;
  int64_t seed = -1;
  int reps = 3;

  auto* ingest = app.add_subcommand(
      "ingest", "Convert source dialogs to canonical NDJSON and print counts");
  ingest->add_option("--data", data, "source directory or NDJSON file")
      ->required();
  ingest->add_option("--out", out, "canonical NDJSON output path");
  ingest->add_flag("--stats-only", stats_only,
                   "print statistics without writing a corpus file");

  auto* stats = app.add_subcommand(
      "stats", "Print corpus statistics (ingest --stats-only)");
  stats->add_option("--data", data, "source directory or NDJSON file")
      ->required();

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config, "flat JSON config file");
  train->add_option("--data", data, "corpus directory or NDJSON file")
      ->required();
  train->add_option("--out", out, "checkpoint output path")->required();
  train->add_option("--log", log_path,
                    "training log path (default: <out>.log)");
  train->add_option("--seed", seed, "override the config seed");
  train->add_flag("--one-grid", one_grid, "single composite-tag grid mode");
  train->add_option("--ablate", ablate,
                    "comma list over {sshg, su, du, mlp, biaffine}")
      ->delimiter(',');

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions");
  evaluate->add_option("--data", data, "gold corpus directory or NDJSON file")
      ->required();
  evaluate->add_option("--checkpoint", checkpoint, "model checkpoint");
  evaluate->add_option("--pred-file", pred_file, "predictions document");
  evaluate->add_flag("--gold-as-pred", gold_as_pred,
                     "score gold against itself (harness check)");
  evaluate->add_option("--out", out, "evaluation report output path");

  auto* predict = app.add_subcommand("predict", "Extract quadruples");
  predict->add_option("--data", data, "corpus directory or NDJSON file")
      ->required();
  predict->add_option("--checkpoint", checkpoint, "model checkpoint")
      ->required();
  predict->add_option("--out", out, "predictions output path")->required();

  auto* benchmark =
      app.add_subcommand("benchmark", "Measure prediction throughput");
  benchmark->add_option("--data", data, "corpus directory or NDJSON file")
      ->required();
  benchmark
      ->add_option("--checkpoint", checkpoints,
                   "checkpoint (repeat for multi-grid then one-grid)")
      ->required();
  benchmark->add_option("--reps", reps, "timed repetitions (median reported)");
  benchmark->add_option("--out", out, "benchmark report output path");

  CLI11_PARSE(app, argc, argv);

  if (ingest->parsed()) return run_ingest(data, out, stats_only);
  if (stats->parsed()) return run_ingest(data, "", true);
  if (train->parsed()) {
    return run_train(config, data, out, log_path, seed, one_grid, ablate);
  }
  if (evaluate->parsed()) {
    return run_evaluate(data, checkpoint, pred_file, gold_as_pred, out);
  }
  if (predict->parsed()) return run_predict(data, checkpoint, out);
  if (benchmark->parsed()) return run_benchmark(data, checkpoints, reps, out);
  return 0;
}
