#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "types.hpp"

namespace ecqed {

using Corpus = std::vector<Dialog>;

// --- canonical JSON (one object per dialog, files are NDJSON) ---

nlohmann::json dialog_to_json(const Dialog& d);
Dialog dialog_from_json(const nlohmann::json& j);

void write_ndjson(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_ndjson(const std::filesystem::path& path);

// --- source-format records ---

// Parses one source record (dialog id -> nested utterance list with
// speaker/text/emotion fields and cause annotations). Violations of the
// upper-triangular constraint are dropped and counted, duplicates keep the
// first occurrence. Throws DataError naming the dialog and field on
// malformed input.
Dialog parse_source_dialog(const std::string& dialog_id, const nlohmann::json& record,
                           Split split, ParseCounters& counters);

struct IngestResult {
  Corpus corpus;
  ParseCounters counters;
  std::vector<std::string> failures;  // one message per rejected dialog
};

// Ingests a directory. *.json files are treated as source-format records
// (split inferred from the file name), *.ndjson / *.jsonl as canonical.
IngestResult ingest_directory(const std::filesystem::path& dir);

// --- validation & statistics ---

ValidationReport validate_dialog(const Dialog& d);

// emotion_idx - cause_idx; 0 means emotion and cause share the utterance
int quadruple_distance(const Quadruple& q);

// Quadruples that share their emotion or cause utterance (same role) with
// another quadruple of the same dialog.
QuadrupleSet overlapped_quadruples(const QuadrupleSet& quadruples);
QuadrupleSet overlapped_quadruples(const Dialog& d);

CorpusStats corpus_statistics(const Corpus& corpus);

nlohmann::json stats_to_json(const CorpusStats& s);

}  // namespace ecqed
