#include "encoder.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "rng.hpp"

namespace ecqed {

using nlohmann::json;

Matrix toy_encode(const Dialog& d, int dim, uint64_t seed) {
  if (dim < 2) throw ConfigError("toy encoder needs dim >= 2");
  const int n = d.size();
  Matrix raw(n, dim);
  for (int i = 0; i < n; ++i) {
    Rng rng(seed ^ fnv1a64(normalize_text(d.utterances[i].text)));
    for (int k = 0; k < dim; ++k) raw(i, k) = rng.gaussian();
    raw.row(i).normalize();
  }
  // mix each row with its (pre-mix) predecessor and re-normalize, so a row
  // depends only on (seed, own text, predecessor text)
  Matrix out = raw;
  for (int i = 1; i < n; ++i) {
    Eigen::RowVectorXd mixed = 0.5 * (raw.row(i) + raw.row(i - 1));
    const double norm = mixed.norm();
    if (norm > 1e-9) {
      out.row(i) = mixed / norm;
    }
  }
  return out;
}

namespace {

class ToyEncoder final : public EncoderAdapter {
 public:
  ToyEncoder(int dim, uint64_t seed)
      : name_("toy:" + std::to_string(dim) + ":" + std::to_string(seed)),
        dim_(dim),
        seed_(seed) {}

  const std::string& name() const override { return name_; }
  int hidden_size() const override { return dim_; }
  Matrix encode(const Dialog& d) const override { return toy_encode(d, dim_, seed_); }

 private:
  std::string name_;
  int dim_;
  uint64_t seed_;
};

// Vectors computed offline (e.g. by a pretrained transformer) and stored as
// NDJSON lines {"dialog_id": ..., "vectors": [[...], ...]}.
class PrecomputedEncoder final : public EncoderAdapter {
 public:
  explicit PrecomputedEncoder(const std::filesystem::path& path)
      : name_("precomputed:" + path.string()) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file '" + path.string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError("bad embeddings line in '" + path.string() + "': " + e.what());
      }
      const auto id = j.at("dialog_id").get<std::string>();
      const auto& rows = j.at("vectors");
      Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != m.cols()) {
          throw DataError("ragged vectors for dialog '" + id + "'");
        }
        for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c].get<double>();
      }
      if (dim_ == 0) {
        dim_ = static_cast<int>(m.cols());
      } else if (dim_ != m.cols()) {
        throw DataError("inconsistent embedding width in '" + path.string() + "'");
      }
      table_.emplace(id, std::move(m));
    }
    if (table_.empty()) throw DataError("no embeddings in '" + path.string() + "'");
  }

  const std::string& name() const override { return name_; }
  int hidden_size() const override { return dim_; }
  Matrix encode(const Dialog& d) const override {
    auto it = table_.find(d.dialog_id);
    if (it == table_.end()) {
      throw DataError("no precomputed vectors for dialog '" + d.dialog_id + "'");
    }
    return it->second;
  }

 private:
  std::string name_;
  int dim_ = 0;
  std::map<std::string, Matrix> table_;
};

std::filesystem::path resolve_cached(const std::string& path) {
  if (std::filesystem::exists(path)) return path;
  if (const char* cache = std::getenv("ECQED_CACHE_DIR")) {
    const auto candidate = std::filesystem::path(cache) / path;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return path;
}

}  // namespace

Matrix encode_utterances(const Dialog& d, const EncoderAdapter& enc) {
  if (d.size() == 0) throw DataError("dialog '" + d.dialog_id + "' has no utterances");
  for (const auto& u : d.utterances) {
    if (normalize_text(u.text).empty()) {
      throw DataError("dialog '" + d.dialog_id + "': utterance " +
                      std::to_string(u.index) + " has no tokens");
    }
  }
  Matrix x;
  try {
    x = enc.encode(d);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError("encoding dialog '" + d.dialog_id + "' failed: " + e.what());
  }
  if (x.rows() != d.size() || x.cols() != enc.hidden_size()) {
    throw DataError("encoder '" + enc.name() + "' returned a " +
                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                    " matrix for dialog '" + d.dialog_id + "'");
  }
  if (!x.allFinite()) {
    throw NumericError("non-finite utterance vectors for dialog '" + d.dialog_id + "'");
  }
  return x;
}

std::unique_ptr<EncoderAdapter> make_adapter(const std::string& selector) {
  if (selector.rfind("toy:", 0) == 0) {
    const auto rest = selector.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("toy encoder selector must be toy:<dim>:<seed>");
    }
    try {
      const int dim = std::stoi(rest.substr(0, colon));
      const uint64_t seed = std::stoull(rest.substr(colon + 1));
      if (dim < 2) throw ConfigError("toy encoder needs dim >= 2");
      return std::make_unique<ToyEncoder>(dim, seed);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad toy encoder selector '" + selector + "'");
    }
  }
  if (selector.rfind("precomputed:", 0) == 0) {
    return std::make_unique<PrecomputedEncoder>(resolve_cached(selector.substr(12)));
  }
  throw ConfigError("unknown encoder adapter '" + selector + "'");
}

ChunkPlan plan_chunks(const std::vector<int>& token_lengths, int window) {
  const int n = static_cast<int>(token_lengths.size());
  std::vector<int> offset(n + 1, 0);  // prefix token offsets
  for (int i = 0; i < n; ++i) {
    if (token_lengths[i] <= 0) throw DataError("utterance with no tokens");
    if (token_lengths[i] > window) {
      throw DataError("utterance " + std::to_string(i + 1) + " exceeds the context window");
    }
    offset[i + 1] = offset[i] + token_lengths[i];
  }

  ChunkPlan plan;
  int start = 0;
  while (start < n) {
    int end = start;
    while (end < n && offset[end + 1] - offset[start] <= window) ++end;
    plan.chunks.push_back({start, end - 1, offset[start], offset[end]});
    if (end == n) break;
    // advance by half a window, snapped to the next utterance boundary
    const int target = offset[start] + window / 2;
    int next = start + 1;
    while (next < end && offset[next] < target) ++next;
    start = next;
  }

  plan.source_chunk.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const double center = 0.5 * (offset[i] + offset[i + 1]);
    double best = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < plan.chunks.size(); ++c) {
      const auto& ch = plan.chunks[c];
      if (i < ch.first_utt || i > ch.last_utt) continue;
      const double chunk_center = 0.5 * (ch.token_begin + ch.token_end);
      const double dist = std::abs(center - chunk_center);
      if (dist < best) {
        best = dist;
        plan.source_chunk[i] = static_cast<int>(c);
      }
    }
  }
  return plan;
}

}  // namespace ecqed
