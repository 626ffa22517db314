#include "ecqed/ecqed.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "evaluator.hpp"
#include "trainer.hpp"

struct ecqed_corpus {
  ecqed::Corpus dialogs;
  ecqed::ParseCounters counters;  // accumulated across ingest calls
};

struct ecqed_model {
  ecqed::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
ecqed_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return ECQED_OK;
  } catch (const ecqed::DataError& e) {
    g_last_error = e.what();
    return ECQED_ERR_DATA;
  } catch (const ecqed::ConfigError& e) {
    g_last_error = e.what();
    return ECQED_ERR_CONFIG;
  } catch (const ecqed::NumericError& e) {
    g_last_error = e.what();
    return ECQED_ERR_NUMERIC;
  } catch (const ecqed::ArtifactError& e) {
    g_last_error = e.what();
    return ECQED_ERR_ARTIFACT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ECQED_ERR_DATA;
  } catch (...) {
    g_last_error = "unknown error";
    return ECQED_ERR_DATA;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ecqed::ConfigError(std::string("invalid argument: ") + what);
}

nlohmann::json predictions_to_json(const ecqed::PredictionMap& preds) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, quads] : preds) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ecqed::Quadruple& q : quads) {
      arr.push_back({{"emotion_idx", q.emotion_idx},
                     {"cause_idx", q.cause_idx},
                     {"emotion_type", ecqed::emotion_name(q.emotion_type)},
                     {"cause_type", ecqed::cause_name(q.cause_type)}});
    }
    out[id] = std::move(arr);
  }
  return out;
}

ecqed::PredictionMap predictions_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ecqed::DataError(std::string("predictions document is not valid JSON: ") +
                           e.what());
  }
  if (!doc.is_object()) {
    throw ecqed::DataError("predictions document must be a JSON object");
  }
  ecqed::PredictionMap out;
  for (const auto& item : doc.items()) {
    const std::string& id = item.key();
    if (!item.value().is_array()) {
      throw ecqed::DataError("predictions for dialog '" + id +
                             "' must be an array");
    }
    ecqed::QuadrupleSet quads;
    for (const auto& rec : item.value()) {
      ecqed::Quadruple q;
      try {
        q.emotion_idx = rec.at("emotion_idx").get<int>();
        q.cause_idx = rec.at("cause_idx").get<int>();
        const auto emo =
            ecqed::parse_emotion_type(rec.at("emotion_type").get<std::string>());
        const auto cause =
            ecqed::parse_cause_type(rec.at("cause_type").get<std::string>());
        if (!emo || !cause) {
          throw ecqed::DataError("unknown emotion or cause type in dialog '" +
                                 id + "'");
        }
        q.emotion_type = *emo;
        q.cause_type = *cause;
      } catch (const nlohmann::json::exception& e) {
        throw ecqed::DataError("malformed prediction record in dialog '" + id +
                               "': " + e.what());
      }
      if (q.cause_idx < 1 || q.emotion_idx < q.cause_idx) {
        throw ecqed::DataError("prediction in dialog '" + id +
                               "' violates the pair ordering constraint");
      }
      quads.insert(q);
    }
    out.emplace(id, std::move(quads));
  }
  return out;
}

nlohmann::json benchmark_to_json(const ecqed::BenchmarkResult& r) {
  return {{"utt_per_s", r.utt_per_s},
          {"rep_utt_per_s", r.rep_utt_per_s},
          {"utterances", r.utterances},
          {"reps", r.reps}};
}

}  // namespace

extern "C" {

const char* ecqed_version(void) { return "0.1.0"; }

const char* ecqed_last_error(void) { return g_last_error.c_str(); }

void ecqed_free_string(char* s) { std::free(s); }

ecqed_status ecqed_corpus_open(ecqed_corpus** out) {
  return guarded([&] {
    require(out != nullptr, "out");
    *out = new ecqed_corpus{};
  });
}

ecqed_status ecqed_corpus_ingest_dir(ecqed_corpus* corpus, const char* dir,
                                     char** failures_json_out) {
  if (failures_json_out != nullptr) *failures_json_out = nullptr;
  std::size_t failed = 0;
  const ecqed_status st = guarded([&] {
    require(corpus != nullptr, "corpus");
    require(dir != nullptr, "dir");
    ecqed::IngestResult result = ecqed::ingest_directory(dir);
    corpus->counters += result.counters;
    failed = result.failures.size();
    if (failures_json_out != nullptr) {
      const nlohmann::json arr = result.failures;
      *failures_json_out = dup_string(arr.dump());
    }
    corpus->dialogs.insert(corpus->dialogs.end(),
                           std::make_move_iterator(result.corpus.begin()),
                           std::make_move_iterator(result.corpus.end()));
    if (failed > 0) {
      throw ecqed::DataError(std::to_string(failed) +
                             " dialog(s) failed to ingest");
    }
  });
  return st;
}

ecqed_status ecqed_corpus_read_ndjson(ecqed_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(path != nullptr, "path");
    ecqed::Corpus extra = ecqed::read_ndjson(path);
    corpus->dialogs.insert(corpus->dialogs.end(),
                           std::make_move_iterator(extra.begin()),
                           std::make_move_iterator(extra.end()));
  });
}

ecqed_status ecqed_corpus_write_ndjson(const ecqed_corpus* corpus,
                                       const char* path) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(path != nullptr, "path");
    ecqed::write_ndjson(corpus->dialogs, path);
  });
}

ecqed_status ecqed_corpus_stats_json(const ecqed_corpus* corpus,
                                     char** json_out) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(json_out != nullptr, "json_out");
    ecqed::CorpusStats stats = ecqed::corpus_statistics(corpus->dialogs);
    stats.parse_counters = corpus->counters;
    *json_out = dup_string(ecqed::stats_to_json(stats).dump());
  });
}

ecqed_status ecqed_corpus_validate_json(const ecqed_corpus* corpus,
                                        char** json_out) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(json_out != nullptr, "json_out");
    nlohmann::json arr = nlohmann::json::array();
    for (const ecqed::Dialog& d : corpus->dialogs) {
      for (const ecqed::ValidationIssue& issue : ecqed::validate_dialog(d)) {
        arr.push_back({{"dialog_id", d.dialog_id},
                       {"code", issue.code},
                       {"location", issue.location},
                       {"message", issue.message}});
      }
    }
    *json_out = dup_string(arr.dump());
  });
}

ecqed_status ecqed_corpus_dialog_count(const ecqed_corpus* corpus,
                                       int64_t* out) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(out != nullptr, "out");
    *out = static_cast<int64_t>(corpus->dialogs.size());
  });
}

void ecqed_corpus_close(ecqed_corpus* corpus) { delete corpus; }

ecqed_status ecqed_config_normalize(const char* config_json, char** json_out) {
  return guarded([&] {
    require(config_json != nullptr, "config_json");
    require(json_out != nullptr, "json_out");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw ecqed::ConfigError(std::string("config is not valid JSON: ") +
                               e.what());
    }
    const ecqed::TrainConfig cfg = ecqed::TrainConfig::from_json(doc);
    *json_out = dup_string(cfg.to_json().dump());
  });
}

ecqed_status ecqed_train(const ecqed_corpus* corpus, const char* config_json,
                         const char* log_path, ecqed_model** out) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(config_json != nullptr, "config_json");
    require(out != nullptr, "out");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw ecqed::ConfigError(std::string("config is not valid JSON: ") +
                               e.what());
    }
    const ecqed::TrainConfig cfg = ecqed::TrainConfig::from_json(doc);
    std::ofstream log_stream;
    std::ostream* log = nullptr;
    if (log_path != nullptr) {
      log_stream.open(log_path, std::ios::trunc);
      if (!log_stream) {
        throw ecqed::ArtifactError(std::string("cannot open training log '") +
                                   log_path + "'");
      }
      log = &log_stream;
    }
    ecqed::TrainResult result = ecqed::train(corpus->dialogs, cfg, log);
    *out = new ecqed_model{std::move(result.best)};
  });
}

ecqed_status ecqed_model_open(const char* path, ecqed_model** out) {
  return guarded([&] {
    require(path != nullptr, "path");
    require(out != nullptr, "out");
    *out = new ecqed_model{ecqed::load_checkpoint(path)};
  });
}

ecqed_status ecqed_model_save(const ecqed_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr, "model");
    require(path != nullptr, "path");
    ecqed::save_checkpoint(model->ckpt, path);
  });
}

ecqed_status ecqed_model_config_json(const ecqed_model* model,
                                     char** json_out) {
  return guarded([&] {
    require(model != nullptr, "model");
    require(json_out != nullptr, "json_out");
    *json_out = dup_string(model->ckpt.config.to_json().dump());
  });
}

ecqed_status ecqed_model_metadata_json(const ecqed_model* model,
                                       char** json_out) {
  return guarded([&] {
    require(model != nullptr, "model");
    require(json_out != nullptr, "json_out");
    *json_out = dup_string(model->ckpt.metadata.dump());
  });
}

void ecqed_model_close(ecqed_model* model) { delete model; }

ecqed_status ecqed_predict_json(const ecqed_model* model,
                                const ecqed_corpus* corpus,
                                char** predictions_json_out) {
  return guarded([&] {
    require(model != nullptr, "model");
    require(corpus != nullptr, "corpus");
    require(predictions_json_out != nullptr, "predictions_json_out");
    const ecqed::PredictionMap preds =
        ecqed::predict_corpus(corpus->dialogs, model->ckpt);
    *predictions_json_out = dup_string(predictions_to_json(preds).dump());
  });
}

ecqed_status ecqed_evaluate(const ecqed_model* model,
                            const ecqed_corpus* corpus,
                            char** report_json_out) {
  return guarded([&] {
    require(model != nullptr, "model");
    require(corpus != nullptr, "corpus");
    require(report_json_out != nullptr, "report_json_out");
    const ecqed::PredictionMap preds =
        ecqed::predict_corpus(corpus->dialogs, model->ckpt);
    const ecqed::EvalReport report =
        ecqed::evaluate_all(preds, corpus->dialogs);
    *report_json_out = dup_string(ecqed::report_to_json(report).dump());
  });
}

ecqed_status ecqed_evaluate_predictions(const ecqed_corpus* gold,
                                        const char* predictions_json,
                                        char** report_json_out) {
  return guarded([&] {
    require(gold != nullptr, "gold");
    require(predictions_json != nullptr, "predictions_json");
    require(report_json_out != nullptr, "report_json_out");
    const ecqed::PredictionMap preds = predictions_from_json(predictions_json);
    const ecqed::EvalReport report = ecqed::evaluate_all(preds, gold->dialogs);
    *report_json_out = dup_string(ecqed::report_to_json(report).dump());
  });
}

ecqed_status ecqed_gold_predictions_json(const ecqed_corpus* corpus,
                                         char** json_out) {
  return guarded([&] {
    require(corpus != nullptr, "corpus");
    require(json_out != nullptr, "json_out");
    ecqed::PredictionMap preds;
    for (const ecqed::Dialog& d : corpus->dialogs) {
      preds[d.dialog_id] = d.quadruples;
    }
    *json_out = dup_string(predictions_to_json(preds).dump());
  });
}

ecqed_status ecqed_benchmark(const ecqed_model* model,
                             const ecqed_model* one_grid_model,
                             const ecqed_corpus* corpus, int reps,
                             char** json_out) {
  return guarded([&] {
    require(model != nullptr, "model");
    require(corpus != nullptr, "corpus");
    require(json_out != nullptr, "json_out");
    nlohmann::json out;
    const ecqed::BenchmarkResult multi =
        ecqed::benchmark_checkpoint(model->ckpt, corpus->dialogs, reps);
    out["multi"] = benchmark_to_json(multi);
    if (one_grid_model != nullptr) {
      const ecqed::BenchmarkResult one = ecqed::benchmark_checkpoint(
          one_grid_model->ckpt, corpus->dialogs, reps);
      out["one_grid"] = benchmark_to_json(one);
      out["ratio_multi_over_one"] =
          one.utt_per_s > 0.0 ? multi.utt_per_s / one.utt_per_s : 0.0;
    }
    // Throughput ratio observed for the full-scale configuration of this
    // architecture; informational only, hardware-dependent.
    out["full_scale_reference_ratio"] = 1.35;
    *json_out = dup_string(out.dump());
  });
}

}  // extern "C"
