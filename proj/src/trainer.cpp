#include "trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <utility>

namespace ecqed {

// --- config ---

void TrainConfig::validate() const {
  if (lr_encoder <= 0.0) throw ConfigError("lr_encoder must be positive");
  if (lr_other <= 0.0) throw ConfigError("lr_other must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (model.hidden_size < 2) throw ConfigError("hidden_size must be at least 2");
  if (model.gcn_layers < 1) throw ConfigError("gcn_layers must be at least 1");
  if (!model.use_mlp && !model.use_biaffine) {
    throw ConfigError("use_mlp and use_biaffine cannot both be false");
  }
  if (encoder.empty()) throw ConfigError("encoder must name an adapter");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr_encoder", lr_encoder},
          {"lr_other", lr_other},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"hidden_size", model.hidden_size},
          {"gcn_layers", model.gcn_layers},
          {"dropout", dropout},
          {"seed", seed},
          {"use_sshg", model.use_sshg},
          {"use_su_edges", model.use_su_edges},
          {"use_du_edges", model.use_du_edges},
          {"use_mlp", model.use_mlp},
          {"use_biaffine", model.use_biaffine},
          {"one_grid", model.one_grid},
          {"encoder", encoder}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  static const std::array<const char*, 15> known = {
      "lr_encoder", "lr_other",     "batch_size",   "epochs",
      "hidden_size", "gcn_layers",  "dropout",      "seed",
      "use_sshg",    "use_su_edges", "use_du_edges", "use_mlp",
      "use_biaffine", "one_grid",   "encoder"};
  for (const auto& item : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&item](const char* k) {
          return item.key() == k;
        }) == known.end()) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }

  auto number = [&j](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) {
      throw ConfigError(std::string("config key '") + key +
                        "' must be a number");
    }
    return j.at(key).get<double>();
  };
  auto integer = [&j](const char* key, long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) {
      throw ConfigError(std::string("config key '") + key +
                        "' must be an integer");
    }
    return j.at(key).get<long>();
  };
  auto boolean = [&j](const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) {
      throw ConfigError(std::string("config key '") + key +
                        "' must be a boolean");
    }
    return j.at(key).get<bool>();
  };

  TrainConfig cfg;
  cfg.lr_encoder = number("lr_encoder", cfg.lr_encoder);
  cfg.lr_other = number("lr_other", cfg.lr_other);
  cfg.batch_size = static_cast<int>(integer("batch_size", cfg.batch_size));
  cfg.epochs = static_cast<int>(integer("epochs", cfg.epochs));
  cfg.dropout = number("dropout", cfg.dropout);
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (s.is_number_unsigned()) {
      cfg.seed = s.get<uint64_t>();
    } else if (s.is_number_integer() && s.get<int64_t>() >= 0) {
      cfg.seed = static_cast<uint64_t>(s.get<int64_t>());
    } else {
      throw ConfigError("config key 'seed' must be a non-negative integer");
    }
  }
  if (j.contains("encoder")) {
    if (!j.at("encoder").is_string()) {
      throw ConfigError("config key 'encoder' must be a string");
    }
    cfg.encoder = j.at("encoder").get<std::string>();
  }
  cfg.model.hidden_size =
      static_cast<int>(integer("hidden_size", cfg.model.hidden_size));
  cfg.model.gcn_layers =
      static_cast<int>(integer("gcn_layers", cfg.model.gcn_layers));
  cfg.model.use_sshg = boolean("use_sshg", cfg.model.use_sshg);
  cfg.model.use_su_edges = boolean("use_su_edges", cfg.model.use_su_edges);
  cfg.model.use_du_edges = boolean("use_du_edges", cfg.model.use_du_edges);
  cfg.model.use_mlp = boolean("use_mlp", cfg.model.use_mlp);
  cfg.model.use_biaffine = boolean("use_biaffine", cfg.model.use_biaffine);
  cfg.model.one_grid = boolean("one_grid", cfg.model.one_grid);
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path.string() +
                      "' is not valid JSON: " + e.what());
  }
  return TrainConfig::from_json(j);
}

// --- loss ---

namespace {

void check_scores_finite(const ScoreTensor& scores) {
  for (const double v : scores.logits) {
    if (!std::isfinite(v)) throw NumericError("scores contain NaN/Inf");
  }
}

}  // namespace

double compute_loss(const ScoreTensor& scores, const TagGridSet& gold) {
  if (scores.n != gold.n() || scores.n_grids != kNumEmotions ||
      scores.n_tags != kNumTags) {
    throw NumericError("score/gold shape mismatch");
  }
  check_scores_finite(scores);
  double total = 0.0;
  long count = 0;
  for (int r = 0; r < scores.n; ++r) {
    for (int c = r; c < scores.n; ++c) {
      for (int g = 0; g < kNumEmotions; ++g) {
        const Tag tag = gold.at(static_cast<EmotionType>(g), r, c);
        total += -std::log(scores.prob(r, c, g, static_cast<int>(tag)));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

double compute_loss_one_grid(const ScoreTensor& scores,
                             const OneGridTagging& gold) {
  if (scores.n != gold.n() || scores.n_grids != 1 ||
      scores.n_tags != kNumOneGridTags) {
    throw NumericError("score/gold shape mismatch");
  }
  check_scores_finite(scores);
  double total = 0.0;
  long count = 0;
  for (int r = 0; r < scores.n; ++r) {
    for (int c = r; c < scores.n; ++c) {
      total += -std::log(scores.prob(r, c, 0, gold.at(r, c)));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

std::vector<int> gold_tag_table(const Dialog& d, const ModelConfig& cfg) {
  const int n = d.size();
  const int n_grids = cfg.n_grids();
  std::vector<int> table(static_cast<std::size_t>(n) * n * n_grids, -1);
  if (cfg.one_grid) {
    const OneGridEncoding enc = encode_one_grid(d);
    for (int r = 0; r < n; ++r) {
      for (int c = r; c < n; ++c) table[r * n + c] = enc.grid.at(r, c);
    }
  } else {
    const TagGridSet grids = encode_grids(d);
    for (int r = 0; r < n; ++r) {
      for (int c = r; c < n; ++c) {
        for (int g = 0; g < kNumEmotions; ++g) {
          table[(static_cast<std::size_t>(r) * n + c) * kNumEmotions + g] =
              static_cast<int>(grids.at(static_cast<EmotionType>(g), r, c));
        }
      }
    }
  }
  return table;
}

LossGrad loss_from_logits(const Matrix& y, int n, int n_grids, int n_tags,
                          const std::vector<int>& gold) {
  if (y.rows() != static_cast<Eigen::Index>(n) * n ||
      y.cols() != n_grids * n_tags ||
      gold.size() != static_cast<std::size_t>(n) * n * n_grids) {
    throw NumericError("loss input shape mismatch");
  }
  LossGrad out;
  out.d_y = Matrix::Zero(y.rows(), y.cols());
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      const int row = r * n + c;
      for (int g = 0; g < n_grids; ++g) {
        const int tag = gold[static_cast<std::size_t>(row) * n_grids + g];
        if (tag < 0 || tag >= n_tags) {
          throw NumericError("gold tag out of range");
        }
        const int base = g * n_tags;
        double hi = y(row, base);
        for (int t = 1; t < n_tags; ++t) hi = std::max(hi, y(row, base + t));
        double denom = 0.0;
        for (int t = 0; t < n_tags; ++t) denom += std::exp(y(row, base + t) - hi);
        out.loss_sum += hi + std::log(denom) - y(row, base + tag);
        for (int t = 0; t < n_tags; ++t) {
          out.d_y(row, base + t) =
              std::exp(y(row, base + t) - hi) / denom - (t == tag ? 1.0 : 0.0);
        }
        ++out.cell_count;
      }
    }
  }
  if (!std::isfinite(out.loss_sum)) {
    throw NumericError("loss is non-finite");
  }
  return out;
}

// --- optimizer ---

AdamOptimizer::AdamOptimizer(const std::vector<ParamRef>& params,
                             double lr_encoder, double lr_other,
                             AdamConfig acfg)
    : params_(params),
      lr_encoder_(lr_encoder),
      lr_other_(lr_other),
      acfg_(acfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const ParamRef& p : params_) {
    m_.emplace_back(p.size, 0.0);
    v_.emplace_back(p.size, 0.0);
  }
}

void AdamOptimizer::step(const std::vector<ParamRef>& grads) {
  if (grads.size() != params_.size()) {
    throw NumericError("optimizer gradient list misaligned");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(acfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(acfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (grads[i].size != params_[i].size) {
      throw NumericError("gradient shape mismatch for " + params_[i].name);
    }
    const double lr = params_[i].encoder_group ? lr_encoder_ : lr_other_;
    double* x = params_[i].data;
    const double* g = grads[i].data;
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t k = 0; k < params_[i].size; ++k) {
      m[k] = acfg_.beta1 * m[k] + (1.0 - acfg_.beta1) * g[k];
      v[k] = acfg_.beta2 * v[k] + (1.0 - acfg_.beta2) * g[k] * g[k];
      x[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + acfg_.eps);
    }
  }
}

void zero_grads(const std::vector<ParamRef>& grads) {
  for (const ParamRef& g : grads) std::fill(g.data, g.data + g.size, 0.0);
}

// --- checkpoint ---

namespace {

constexpr char kMagic[4] = {'E', 'C', 'Q', 'D'};
constexpr uint32_t kCheckpointVersion = 1;
constexpr uint64_t kMaxBlob = 1ULL << 30;

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put_pod(std::ostream& os, T v) {
  put_bytes(os, &v, sizeof v);
}

void put_blob(std::ostream& os, const std::string& s) {
  put_pod<uint64_t>(os, s.size());
  put_bytes(os, s.data(), s.size());
}

void get_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw ArtifactError("truncated checkpoint file");
}

template <typename T>
T get_pod(std::istream& is) {
  T v;
  get_bytes(is, &v, sizeof v);
  return v;
}

std::string get_blob(std::istream& is) {
  const uint64_t len = get_pod<uint64_t>(is);
  if (len > kMaxBlob) throw ArtifactError("checkpoint blob too large");
  std::string s(static_cast<std::size_t>(len), '\0');
  if (len > 0) get_bytes(is, s.data(), static_cast<std::size_t>(len));
  return s;
}

nlohmann::json parse_artifact_json(const std::string& text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("checkpoint ") + what +
                        " is not valid JSON: " + e.what());
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw ArtifactError("cannot open '" + path.string() + "' for writing");
  }
  put_bytes(os, kMagic, sizeof kMagic);
  put_pod<uint32_t>(os, kCheckpointVersion);
  put_blob(os, ckpt.config.to_json().dump());
  put_blob(os, ckpt.metadata.dump());
  // Raw host-endian (little-endian) doubles; bit-identical on reload.
  ModelParams copy = ckpt.params;
  const auto refs = enumerate_params(copy);
  put_pod<uint32_t>(os, static_cast<uint32_t>(refs.size()));
  for (const ParamRef& ref : refs) {
    put_blob(os, ref.name);
    put_pod<uint64_t>(os, ref.size);
    put_bytes(os, ref.data, ref.size * sizeof(double));
  }
  os.flush();
  if (!os) throw ArtifactError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArtifactError("cannot open checkpoint '" + path.string() + "'");
  char magic[4];
  get_bytes(is, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ArtifactError("'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  const auto version = get_pod<uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw ArtifactError("unsupported checkpoint version " +
                        std::to_string(version));
  }
  Checkpoint ckpt;
  try {
    ckpt.config = TrainConfig::from_json(parse_artifact_json(get_blob(is), "config"));
  } catch (const ConfigError& e) {
    throw ArtifactError(std::string("checkpoint config invalid: ") + e.what());
  }
  ckpt.metadata = parse_artifact_json(get_blob(is), "metadata");

  // Shape the parameter set from the config, then overwrite every value.
  ckpt.params = init_params(ckpt.config.model, 0);
  const auto refs = enumerate_params(ckpt.params);
  const auto n_sections = get_pod<uint32_t>(is);
  if (n_sections != refs.size()) {
    throw ArtifactError("checkpoint section count mismatch");
  }
  for (const ParamRef& ref : refs) {
    const std::string name = get_blob(is);
    if (name != ref.name) {
      throw ArtifactError("checkpoint section mismatch: expected '" + ref.name +
                          "', found '" + name + "'");
    }
    const auto count = get_pod<uint64_t>(is);
    if (count != ref.size) {
      throw ArtifactError("checkpoint section '" + name + "' has wrong size");
    }
    get_bytes(is, ref.data, static_cast<std::size_t>(count) * sizeof(double));
  }
  is.peek();
  if (!is.eof()) throw ArtifactError("trailing bytes in checkpoint");
  return ckpt;
}

// --- training & prediction ---

namespace {

struct PreparedDialog {
  const Dialog* dialog = nullptr;
  Matrix x;
  std::vector<int> gold;
};

QuadrupleSet predict_from_features(const Dialog& d, const Matrix& x,
                                   const ModelParams& params,
                                   const ModelConfig& cfg) {
  const Matrix y = model_forward(d, x, params, cfg);
  const ScoreTensor scores =
      fuse_scores(y, d.size(), cfg.n_grids(), cfg.n_tags());
  return decode_scores(scores, cfg.one_grid);
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg,
                  std::ostream* log) {
  cfg.validate();
  const auto adapter = make_adapter(cfg.encoder);
  if (adapter->hidden_size() != cfg.model.hidden_size) {
    throw ConfigError("encoder hidden size " +
                      std::to_string(adapter->hidden_size()) +
                      " does not match configured hidden_size " +
                      std::to_string(cfg.model.hidden_size));
  }

  std::vector<PreparedDialog> train_set;
  Corpus val_dialogs;
  for (const Dialog& d : corpus) {
    if (d.split == Split::train) {
      train_set.push_back(
          {&d, encode_utterances(d, *adapter), gold_tag_table(d, cfg.model)});
    } else if (d.split == Split::val) {
      val_dialogs.push_back(d);
    }
  }
  if (train_set.empty()) throw ConfigError("training split is empty");

  // Selection split: validation when present, else the train split itself.
  Corpus selection = val_dialogs;
  if (selection.empty()) {
    for (const PreparedDialog& pr : train_set) selection.push_back(*pr.dialog);
  }
  std::vector<Matrix> selection_x;
  selection_x.reserve(selection.size());
  for (const Dialog& d : selection) {
    selection_x.push_back(encode_utterances(d, *adapter));
  }

  ModelParams params = init_params(cfg.model, cfg.seed);
  const auto refs = enumerate_params(params);
  ModelParams grad = zero_like(params);
  const auto grad_refs = enumerate_params(grad);
  AdamOptimizer opt(refs, cfg.lr_encoder, cfg.lr_other);

  Rng master(cfg.seed);
  TrainResult result;
  ModelParams best = params;
  double best_f1 = -1.0;
  int best_epoch = 0;
  std::vector<double> loss_curve;
  std::vector<double> f1_curve;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng = master.fork(1000000ULL + static_cast<uint64_t>(epoch));
    Rng dropout_rng = master.fork(2000000ULL + static_cast<uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }

    double epoch_loss = 0.0;
    long epoch_cells = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      long batch_cells = 0;
      for (std::size_t b = start; b < stop; ++b) {
        const int n = train_set[order[b]].dialog->size();
        batch_cells += static_cast<long>(cfg.model.n_grids()) * n * (n + 1) / 2;
      }
      zero_grads(grad_refs);
      for (std::size_t b = start; b < stop; ++b) {
        const PreparedDialog& pr = train_set[order[b]];
        ModelCache cache;
        const Matrix y = model_forward(*pr.dialog, pr.x, params, cfg.model,
                                       &cache, cfg.dropout, &dropout_rng);
        LossGrad lg = loss_from_logits(y, pr.dialog->size(), cfg.model.n_grids(),
                                       cfg.model.n_tags(), pr.gold);
        if (!std::isfinite(lg.loss_sum)) {
          throw NumericError("training loss diverged at epoch " +
                             std::to_string(epoch) + " on dialog '" +
                             pr.dialog->dialog_id + "'");
        }
        lg.d_y /= static_cast<double>(batch_cells);
        model_backward(pr.x, params, cfg.model, cache, lg.d_y, grad);
        epoch_loss += lg.loss_sum;
        epoch_cells += lg.cell_count;
      }
      opt.step(grad_refs);
    }
    const double train_loss = epoch_loss / static_cast<double>(epoch_cells);

    PredictionMap preds;
    for (std::size_t i = 0; i < selection.size(); ++i) {
      preds[selection[i].dialog_id] =
          predict_from_features(selection[i], selection_x[i], params, cfg.model);
    }
    const double f1 = evaluate_quadruples(preds, selection).f1;

    result.curve.push_back({epoch, train_loss, f1});
    loss_curve.push_back(train_loss);
    f1_curve.push_back(f1);
    if (log != nullptr) {
      const nlohmann::json line = {
          {"epoch", epoch}, {"train_loss", train_loss}, {"val_f1_quad", f1}};
      (*log) << line.dump() << "\n";
    }
    if (f1 >= best_f1) {
      best_f1 = f1;
      best_epoch = epoch;
      best = params;
    }
  }

  result.best_epoch = best_epoch;
  result.best_val_f1 = best_f1;
  result.best.config = cfg;
  result.best.params = std::move(best);
  result.best.metadata = {
      {"epoch", best_epoch},
      {"seed", cfg.seed},
      {"loss_curve", loss_curve},
      {"val_f1_curve", f1_curve},
      {"selection_split", val_dialogs.empty() ? "train" : "val"}};
  return result;
}

QuadrupleSet predict(const Dialog& d, const ModelParams& params,
                     const ModelConfig& cfg, const EncoderAdapter& enc) {
  return predict_from_features(d, encode_utterances(d, enc), params, cfg);
}

PredictionMap predict_corpus(const Corpus& corpus, const Checkpoint& ckpt) {
  const auto adapter = make_adapter(ckpt.config.encoder);
  if (adapter->hidden_size() != ckpt.config.model.hidden_size) {
    throw ConfigError("checkpoint encoder hidden size mismatch");
  }
  PredictionMap out;
  for (const Dialog& d : corpus) {
    out[d.dialog_id] = predict(d, ckpt.params, ckpt.config.model, *adapter);
  }
  return out;
}

BenchmarkResult benchmark_checkpoint(const Checkpoint& ckpt,
                                     const Corpus& corpus, int reps) {
  if (corpus.empty()) throw DataError("benchmark requires a non-empty corpus");
  const auto adapter = make_adapter(ckpt.config.encoder);
  if (adapter->hidden_size() != ckpt.config.model.hidden_size) {
    throw ConfigError("checkpoint encoder hidden size mismatch");
  }
  long utterances = 0;
  for (const Dialog& d : corpus) utterances += d.size();
  long sink = 0;
  const auto pass = [&corpus, &ckpt, &adapter, &sink] {
    for (const Dialog& d : corpus) {
      sink += static_cast<long>(
          predict(d, ckpt.params, ckpt.config.model, *adapter).size());
    }
  };
  BenchmarkResult result = run_benchmark(pass, utterances, reps);
  if (sink < 0) throw NumericError("benchmark sink underflow");  // keep pass live
  return result;
}

}  // namespace ecqed
