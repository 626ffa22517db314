#include "corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ecqed {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& dialog_id, const std::string& field,
                             const std::string& what) {
  throw DataError("parse error in dialog '" + dialog_id + "', field '" + field +
                  "': " + what);
}

std::string label_string(const std::optional<EmotionType>& e) {
  return e ? emotion_name(*e) : "neutral";
}

}  // namespace

json dialog_to_json(const Dialog& d) {
  json utts = json::array();
  for (const auto& u : d.utterances) {
    utts.push_back({{"index", u.index},
                    {"speaker", u.speaker},
                    {"text", u.text},
                    {"emotion", label_string(u.emotion)}});
  }
  json quads = json::array();
  for (const auto& q : d.quadruples) {
    quads.push_back({{"emotion_idx", q.emotion_idx},
                     {"cause_idx", q.cause_idx},
                     {"emotion_type", emotion_name(q.emotion_type)},
                     {"cause_type", cause_name(q.cause_type)}});
  }
  return {{"dialog_id", d.dialog_id},
          {"split", split_name(d.split)},
          {"utterances", utts},
          {"quadruples", quads}};
}

Dialog dialog_from_json(const json& j) {
  Dialog d;
  if (!j.is_object() || !j.contains("dialog_id") || !j["dialog_id"].is_string()) {
    throw DataError("dialog record missing string field 'dialog_id'");
  }
  d.dialog_id = j["dialog_id"].get<std::string>();
  if (!j.contains("split")) parse_fail(d.dialog_id, "split", "missing");
  auto split = parse_split(j["split"].get<std::string>());
  if (!split) parse_fail(d.dialog_id, "split", "unknown value");
  d.split = *split;

  if (!j.contains("utterances") || !j["utterances"].is_array()) {
    parse_fail(d.dialog_id, "utterances", "missing or not an array");
  }
  for (const auto& ju : j["utterances"]) {
    Utterance u;
    for (const char* key : {"index", "speaker", "text", "emotion"}) {
      if (!ju.contains(key)) parse_fail(d.dialog_id, key, "missing");
    }
    u.index = ju["index"].get<int>();
    u.speaker = ju["speaker"].get<std::string>();
    u.text = ju["text"].get<std::string>();
    auto label = parse_emotion_label(ju["emotion"].get<std::string>());
    if (!label) {
      parse_fail(d.dialog_id, "emotion",
                 "unknown label '" + ju["emotion"].get<std::string>() + "'");
    }
    u.emotion = *label;
    d.utterances.push_back(std::move(u));
  }

  if (j.contains("quadruples")) {
    for (const auto& jq : j["quadruples"]) {
      Quadruple q;
      q.emotion_idx = jq.at("emotion_idx").get<int>();
      q.cause_idx = jq.at("cause_idx").get<int>();
      auto et = parse_emotion_type(jq.at("emotion_type").get<std::string>());
      if (!et) parse_fail(d.dialog_id, "emotion_type", "unknown value");
      auto ct = parse_cause_type(jq.at("cause_type").get<std::string>());
      if (!ct) parse_fail(d.dialog_id, "cause_type", "unknown value");
      q.emotion_type = *et;
      q.cause_type = *ct;
      d.quadruples.insert(q);
    }
  }
  return d;
}

void write_ndjson(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& d : corpus) {
    out << dialog_to_json(d).dump() << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Corpus read_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  Corpus corpus;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.push_back(dialog_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": invalid JSON: " + e.what());
    }
  }
  return corpus;
}

Dialog parse_source_dialog(const std::string& dialog_id, const json& record,
                           Split split, ParseCounters& counters) {
  // Source records wrap the utterance list in an extra single-element array.
  const json* turns = &record;
  while (turns->is_array() && turns->size() == 1 && (*turns)[0].is_array()) {
    turns = &(*turns)[0];
  }
  if (!turns->is_array() || turns->empty()) {
    parse_fail(dialog_id, "utterances", "expected a non-empty utterance array");
  }

  Dialog d;
  d.dialog_id = dialog_id;
  d.split = split;

  for (const auto& jt : *turns) {
    Utterance u;
    if (!jt.contains("turn") || !jt["turn"].is_number_integer()) {
      parse_fail(dialog_id, "turn", "missing or not an integer");
    }
    u.index = jt["turn"].get<int>();
    if (!jt.contains("speaker")) parse_fail(dialog_id, "speaker", "missing");
    u.speaker = jt["speaker"].get<std::string>();
    if (!jt.contains("utterance")) parse_fail(dialog_id, "utterance", "missing");
    u.text = jt["utterance"].get<std::string>();
    if (normalize_text(u.text).empty()) {
      parse_fail(dialog_id, "utterance", "empty text at turn " + std::to_string(u.index));
    }
    if (!jt.contains("emotion")) parse_fail(dialog_id, "emotion", "missing");
    auto label = parse_emotion_label(jt["emotion"].get<std::string>());
    if (!label) {
      parse_fail(dialog_id, "emotion",
                 "unknown label '" + jt["emotion"].get<std::string>() + "'");
    }
    u.emotion = *label;
    d.utterances.push_back(std::move(u));
  }

  const int n = d.size();
  for (int i = 0; i < n; ++i) {
    if (d.utterances[i].index != i + 1) {
      parse_fail(dialog_id, "turn", "indices not contiguous from 1");
    }
  }

  // Cause annotations live on the emotion utterance: parallel arrays of
  // evidence turns and cause types.
  std::set<std::tuple<int, int, EmotionType>> seen;
  for (const auto& jt : *turns) {
    const int turn = jt["turn"].get<int>();
    const auto& utt = d.utterances[turn - 1];
    if (!jt.contains("expanded emotion cause evidence")) continue;
    if (utt.neutral()) continue;  // cannot anchor a quadruple
    const json& evidence = jt["expanded emotion cause evidence"];
    if (!evidence.is_array()) parse_fail(dialog_id, "expanded emotion cause evidence", "not an array");
    if (!jt.contains("type") || !jt["type"].is_array()) {
      parse_fail(dialog_id, "type", "missing cause type array");
    }
    const json& types = jt["type"];
    if (types.size() != evidence.size()) {
      parse_fail(dialog_id, "type", "length differs from cause evidence");
    }
    for (size_t k = 0; k < evidence.size(); ++k) {
      if (!evidence[k].is_number_integer()) {
        // latent causes ("b") have no utterance to point at
        counters.skipped_latent_cause++;
        continue;
      }
      const int cause_turn = evidence[k].get<int>();
      if (cause_turn < 1 || cause_turn > n) {
        parse_fail(dialog_id, "expanded emotion cause evidence",
                   "turn " + std::to_string(cause_turn) + " out of range");
      }
      if (cause_turn > turn) {
        counters.dropped_forward_cause++;
        continue;
      }
      auto ct = parse_cause_type(types[k].get<std::string>());
      if (!ct) {
        parse_fail(dialog_id, "type", "unknown cause type '" + types[k].get<std::string>() + "'");
      }
      Quadruple q{turn, cause_turn, *utt.emotion, *ct};
      auto key = std::make_tuple(q.emotion_idx, q.cause_idx, q.emotion_type);
      if (!seen.insert(key).second) {
        counters.duplicate_triple++;  // first occurrence wins
        continue;
      }
      d.quadruples.insert(q);
    }
  }
  return d;
}

namespace {

std::optional<Split> split_from_filename(const std::string& name) {
  const std::string s = normalize_text(name);
  if (s.find("train") != std::string::npos) return Split::train;
  if (s.find("valid") != std::string::npos || s.find("val") != std::string::npos ||
      s.find("dev") != std::string::npos) {
    return Split::val;
  }
  if (s.find("test") != std::string::npos) return Split::test;
  return std::nullopt;
}

}  // namespace

IngestResult ingest_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("source '" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    // manifest.json is a stats sidecar, not corpus data
    if (entry.path().filename() == "manifest.json") continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".json" || ext == ".ndjson" || ext == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  IngestResult result;
  for (const auto& path : files) {
    const auto ext = path.extension().string();
    if (ext == ".ndjson" || ext == ".jsonl") {
      try {
        Corpus part = read_ndjson(path);
        result.corpus.insert(result.corpus.end(), part.begin(), part.end());
      } catch (const DataError& e) {
        result.failures.push_back(e.what());
      }
      continue;
    }
    // source-format file; split taken from the file name
    auto split = split_from_filename(path.filename().string());
    if (!split) {
      result.failures.push_back(path.string() + ": cannot infer split from file name");
      continue;
    }
    std::ifstream in(path);
    if (!in) {
      result.failures.push_back(path.string() + ": cannot open");
      continue;
    }
    json root;
    try {
      in >> root;
    } catch (const json::exception& e) {
      result.failures.push_back(path.string() + ": invalid JSON: " + std::string(e.what()));
      continue;
    }
    if (!root.is_object()) {
      result.failures.push_back(path.string() + ": expected an object keyed by dialog id");
      continue;
    }
    for (auto it = root.begin(); it != root.end(); ++it) {
      try {
        result.corpus.push_back(
            parse_source_dialog(it.key(), it.value(), *split, result.counters));
      } catch (const std::exception& e) {
        result.failures.push_back(std::string("dialog '") + it.key() + "': " + e.what());
      }
    }
  }
  if (result.corpus.empty() && result.failures.empty()) {
    throw DataError("no dialogs found in '" + dir.string() + "'");
  }
  return result;
}

ValidationReport validate_dialog(const Dialog& d) {
  ValidationReport report;
  auto add = [&](const std::string& code, const std::string& where, const std::string& msg) {
    report.push_back({code, d.dialog_id + (where.empty() ? "" : "/" + where), msg});
  };

  const int n = d.size();
  if (n == 0) {
    add("no_utterances", "", "dialog has no utterances");
  }
  for (int i = 0; i < n; ++i) {
    const auto& u = d.utterances[i];
    if (u.index != i + 1) {
      add("non_contiguous_index", "utterance[" + std::to_string(i) + "]",
          "expected index " + std::to_string(i + 1) + ", found " + std::to_string(u.index));
    }
    if (normalize_text(u.text).empty()) {
      add("empty_text", "u" + std::to_string(u.index), "utterance text is empty");
    }
  }

  std::set<std::tuple<int, int, EmotionType>> seen;
  for (const auto& q : d.quadruples) {
    const std::string where = "quadruple(e=" + std::to_string(q.emotion_idx) +
                              ",c=" + std::to_string(q.cause_idx) + ")";
    const bool in_range =
        q.emotion_idx >= 1 && q.emotion_idx <= n && q.cause_idx >= 1 && q.cause_idx <= n;
    if (!in_range) {
      add("dangling_index", where, "quadruple refers to a missing utterance");
    }
    if (q.cause_idx > q.emotion_idx) {
      add("forward_cause", where, "cause follows its emotion utterance");
    }
    if (in_range) {
      const auto& u = d.utterances[q.emotion_idx - 1];
      if (!u.neutral() && *u.emotion != q.emotion_type) {
        add("label_mismatch", where,
            "quadruple type '" + emotion_name(q.emotion_type) +
                "' differs from utterance label '" + label_string(u.emotion) + "'");
      }
    }
    if (!seen.insert({q.emotion_idx, q.cause_idx, q.emotion_type}).second) {
      add("duplicate_triple", where, "repeated (emotion, cause, emotion_type)");
    }
  }
  return report;
}

int quadruple_distance(const Quadruple& q) { return q.emotion_idx - q.cause_idx; }

QuadrupleSet overlapped_quadruples(const QuadrupleSet& quadruples) {
  QuadrupleSet out;
  for (const auto& q : quadruples) {
    for (const auto& other : quadruples) {
      if (other == q) continue;
      if (other.emotion_idx == q.emotion_idx || other.cause_idx == q.cause_idx) {
        out.insert(q);
        break;
      }
    }
  }
  return out;
}

QuadrupleSet overlapped_quadruples(const Dialog& d) {
  return overlapped_quadruples(d.quadruples);
}

CorpusStats corpus_statistics(const Corpus& corpus) {
  CorpusStats s;
  long overlapped_dialogs = 0;
  for (const auto& d : corpus) {
    const auto si = static_cast<size_t>(d.split);
    s.conversations[si]++;
    s.utterances[si] += d.size();
    s.quadruples[si] += static_cast<long>(d.quadruples.size());
    for (const auto& q : d.quadruples) {
      s.emotion_type_counts[static_cast<size_t>(q.emotion_type)]++;
      s.cause_type_counts[static_cast<size_t>(q.cause_type)]++;
      s.distance_histogram[quadruple_distance(q)]++;
    }
    if (!overlapped_quadruples(d).empty()) overlapped_dialogs++;
  }
  if (!corpus.empty()) {
    s.overlap_dialog_ratio = static_cast<double>(overlapped_dialogs) /
                             static_cast<double>(corpus.size());
  }
  return s;
}

json stats_to_json(const CorpusStats& s) {
  auto per_split = [](const std::array<long, kNumSplits>& a) {
    return json{{"train", a[0]}, {"val", a[1]}, {"test", a[2]}};
  };
  json emotions, causes;
  for (int e = 0; e < kNumEmotions; ++e) {
    emotions[emotion_name(static_cast<EmotionType>(e))] = s.emotion_type_counts[e];
  }
  for (int c = 0; c < kNumCauseTypes; ++c) {
    causes[cause_name(static_cast<CauseType>(c))] = s.cause_type_counts[c];
  }
  json hist = json::object();
  for (const auto& [dist, count] : s.distance_histogram) {
    hist[std::to_string(dist)] = count;
  }
  return {{"conversations", per_split(s.conversations)},
          {"utterances", per_split(s.utterances)},
          {"quadruples", per_split(s.quadruples)},
          {"emotion_type_counts", emotions},
          {"cause_type_counts", causes},
          {"overlap_dialog_ratio", s.overlap_dialog_ratio},
          {"distance_histogram", hist},
          {"dropped_forward_cause_count", s.parse_counters.dropped_forward_cause},
          {"duplicate_triple_count", s.parse_counters.duplicate_triple},
          {"skipped_latent_cause_count", s.parse_counters.skipped_latent_cause}};
}

}  // namespace ecqed
