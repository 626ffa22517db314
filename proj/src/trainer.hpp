#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "encoder.hpp"
#include "evaluator.hpp"
#include "model.hpp"

namespace ecqed {

// Flat config document.  Every key is optional (defaults below); unknown keys
// are rejected by name.
struct TrainConfig {
  double lr_encoder = 2e-5;
  double lr_other = 1e-5;
  int batch_size = 2;
  int epochs = 50;
  double dropout = 0.2;
  uint64_t seed = 42;
  std::string encoder = "toy:768:0";
  ModelConfig model;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

TrainConfig load_train_config(const std::filesystem::path& path);

// --- loss ---

// Mean over valid (upper-triangular) cells of all grids of -log p(gold tag).
double compute_loss(const ScoreTensor& scores, const TagGridSet& gold);
double compute_loss_one_grid(const ScoreTensor& scores,
                             const OneGridTagging& gold);

// Gold tag per (cell, grid) aligned with the logits layout
// (index = (row*n + col)*n_grids + grid); -1 marks masked cells.
std::vector<int> gold_tag_table(const Dialog& d, const ModelConfig& cfg);

// Training form: summed -log softmax(y)[gold] over valid cells plus the
// matching logit gradient, both from raw logits via log-sum-exp.
struct LossGrad {
  double loss_sum = 0.0;
  long cell_count = 0;
  Matrix d_y;
};
LossGrad loss_from_logits(const Matrix& y, int n, int n_grids, int n_tags,
                          const std::vector<int>& gold);

// --- optimizer ---

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over the flat parameter views, with the two learning-rate groups.
class AdamOptimizer {
 public:
  AdamOptimizer(const std::vector<ParamRef>& params, double lr_encoder,
                double lr_other, AdamConfig acfg = {});
  // grads must align one-to-one with the params given at construction.
  void step(const std::vector<ParamRef>& grads);
  long steps() const { return t_; }

 private:
  std::vector<ParamRef> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  double lr_encoder_;
  double lr_other_;
  AdamConfig acfg_;
  long t_ = 0;
};

void zero_grads(const std::vector<ParamRef>& grads);

// --- checkpoint ---

struct Checkpoint {
  TrainConfig config;
  nlohmann::json metadata;  // epoch, seed, loss curve, selection split
  ModelParams params;
};

// Single versioned binary file: magic/version, embedded JSON config and
// metadata, then named raw little-endian double sections.  Reload is
// bit-identical.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// --- training & prediction ---

struct EpochStat {
  int epoch = 0;
  double train_loss = 0.0;
  double val_f1_quad = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochStat> curve;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
};

// Mini-batch training over the train split; model selection by validation
// quadruple F1 (ties go to the later epoch).  When the corpus has no val
// dialogs the train split doubles as the selection split.  log, when given,
// receives one JSON record per epoch: {epoch, train_loss, val_f1_quad}.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

QuadrupleSet predict(const Dialog& d, const ModelParams& params,
                     const ModelConfig& cfg, const EncoderAdapter& enc);
PredictionMap predict_corpus(const Corpus& corpus, const Checkpoint& ckpt);

// End-to-end prediction throughput of one checkpoint over a corpus.
BenchmarkResult benchmark_checkpoint(const Checkpoint& ckpt,
                                     const Corpus& corpus, int reps = 3);

}  // namespace ecqed
