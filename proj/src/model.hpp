#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "graph.hpp"
#include "grid.hpp"
#include "rng.hpp"
#include "scorer.hpp"

namespace ecqed {

// Speaker embeddings are keyed by within-dialog role order (first speaker ->
// slot 0, ...), capped at 8 roles; later speakers share the final fallback row.
inline constexpr int kSpeakerTableRows = 9;

struct ModelConfig {
  int hidden_size = 768;
  int gcn_layers = 2;
  bool use_sshg = true;
  bool use_su_edges = true;
  bool use_du_edges = true;
  bool use_mlp = true;
  bool use_biaffine = true;
  bool one_grid = false;

  int n_grids() const { return one_grid ? 1 : kNumEmotions; }
  int n_tags() const { return one_grid ? kNumOneGridTags : kNumTags; }
  int n_classes() const { return n_grids() * n_tags(); }
  int d_p() const { return std::max(1, hidden_size / 2); }
  GraphOptions graph_options() const { return {use_du_edges, use_su_edges}; }
  ScorerOptions scorer_options() const { return {use_mlp, use_biaffine}; }
};

struct ModelParams {
  Matrix speaker_table;        // kSpeakerTableRows x d
  std::vector<RgcnLayer> gcn;  // one entry per graph layer
  ScorerParams scorer;
};

// Flat view of one parameter tensor, used by the optimizer, the checkpoint
// codec and the finite-difference checks.  encoder_group selects the encoder
// learning rate; the bundled adapters expose no trainable state, so it is
// false everywhere today.
struct ParamRef {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
  bool encoder_group = false;
};

ModelParams init_params(const ModelConfig& cfg, uint64_t seed);
ModelParams zero_like(const ModelParams& p);
std::vector<ParamRef> enumerate_params(ModelParams& p);

// Everything the backward pass needs from one forward evaluation.
struct ModelCache {
  HeteroGraph graph;
  Matrix features;                // node features (n_nodes x d)
  std::vector<Matrix> layer_in;   // graph layer inputs
  std::vector<Matrix> pre_act;    // graph layer pre-activations
  std::vector<Matrix> drop_mask;  // inverted-dropout masks on layer outputs
  Matrix h;                       // utterance representations fed to the scorer
  Matrix v_mask;                  // dropout mask on the pair representation
  ScorerCache scorer;
};

// Full forward pass: (optional) graph encoding then pair scoring.  x holds the
// encoder output (N x d).  dropout > 0 requires rng and samples fresh
// inverted-dropout masks (training mode); dropout == 0 is the deterministic
// inference path.  Returns raw logits, (N*N) x n_classes.
Matrix model_forward(const Dialog& dialog, const Matrix& x,
                     const ModelParams& p, const ModelConfig& cfg,
                     ModelCache* cache = nullptr, double dropout = 0.0,
                     Rng* rng = nullptr);

// Accumulates parameter gradients into grad and returns dL/dx.
Matrix model_backward(const Matrix& x, const ModelParams& p,
                      const ModelConfig& cfg, const ModelCache& cache,
                      const Matrix& d_y, ModelParams& grad);

// Argmax decode of fused scores into quadruples via the grid codecs.
QuadrupleSet decode_scores(const ScoreTensor& scores, bool one_grid);

}  // namespace ecqed
