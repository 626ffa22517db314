#pragma once

#include <cstddef>
#include <vector>

#include "encoder.hpp"
#include "types.hpp"

namespace ecqed {

// Stabilizer added to the standard deviation inside conditional layer norm.
inline constexpr double kClnEps = 1e-5;

// Conditional layer normalization: the conditioning vector produces the gain
// and offset that modulate the normalized value vector.
struct ClnParams {
  Matrix w_alpha;  // d x d, gain projection
  Matrix w_beta;   // d x d, offset projection
  Vector b_alpha;  // d
  Vector b_beta;   // d
  double eps = kClnEps;
};

// Two-layer perceptron head: d_in -> d_hidden (relu) -> k logits.
struct MlpParams {
  Matrix w1;  // d_hidden x d_in
  Vector b1;  // d_hidden
  Matrix w2;  // k x d_hidden
  Vector b2;  // k
};

struct Projection {
  Matrix w;  // d_p x d
  Vector b;  // d_p
};

// Bilinear-plus-linear head over (emotion-space, cause-space) vector pairs:
// y[k] = e^T u[k] c + w.row(k) * [e; c] + b[k], with the emotion half of w
// first.  e and c come from one-layer relu projections of the utterance
// representations.
struct BiaffineParams {
  Projection emotion;
  Projection cause;
  std::vector<Matrix> u;  // k entries, each d_p x d_p
  Matrix w;               // k x 2*d_p
  Vector b;               // k

  int d_p() const { return static_cast<int>(emotion.w.rows()); }
  int k() const { return static_cast<int>(b.size()); }
};

struct ScorerParams {
  ClnParams cln;
  MlpParams mlp;
  BiaffineParams biaffine;
};

// Ablation switches; at least one head must stay enabled.
struct ScorerOptions {
  bool use_mlp = true;
  bool use_biaffine = true;
};

// Fused per-cell scores.  Cell (row, col) pairs cause utterance row with
// emotion utterance col (0-based); each cell carries n_grids independent
// n_tags-way distributions.  The last tag index is NONE; cells in the strict
// lower triangle are forced to probability 1 on NONE.
struct ScoreTensor {
  int n = 0;
  int n_grids = 0;
  int n_tags = 0;
  std::vector<double> logits;
  std::vector<double> probs;

  int none_tag() const { return n_tags - 1; }
  std::size_t offset(int row, int col, int grid, int tag) const {
    return ((static_cast<std::size_t>(row) * n + col) * n_grids + grid) * n_tags +
           tag;
  }
  double logit(int row, int col, int grid, int tag) const {
    return logits[offset(row, col, grid, tag)];
  }
  double prob(int row, int col, int grid, int tag) const {
    return probs[offset(row, col, grid, tag)];
  }
};

// Intermediate activations kept for the backward pass.
struct ScorerCache {
  int n = 0;
  Matrix gamma;   // N x d, gain per conditioning (emotion) index
  Matrix lambda;  // N x d, offset per conditioning index
  Matrix u;       // N x d, normalized value (cause) rows
  Vector sigma;   // N, population std per row before the eps shift
  Matrix v;       // N*N x d pair representations, row index = row*N + col
  Matrix v_in;    // MLP input (v after optional dropout)
  Matrix z1;      // N*N x d_hidden
  Matrix a1;      // N*N x d_hidden
  Matrix e_pre;   // N x d_p
  Matrix e_act;   // N x d_p
  Matrix c_pre;   // N x d_p
  Matrix c_act;   // N x d_p
};

// Single-pair conditional layer norm, the unit the grid representation is
// built from: (w_alpha cond + b_alpha) o norm(value) + (w_beta cond + b_beta).
Vector cln(const Vector& cond, const Vector& value, const ClnParams& p);

// Scores every cell of every grid in one pass.  h is N x d; the result is
// (N*N) x K raw logits with K = n_grids * n_tags and row index row*N + col.
// v_dropout, when given, is an (N*N) x d inverted-dropout mask applied to the
// pair representation before the MLP head.
Matrix scorer_forward(const Matrix& h, const ScorerParams& p,
                      const ScorerOptions& opt, ScorerCache* cache = nullptr,
                      const Matrix* v_dropout = nullptr);

// Softmax per (cell, grid) plus lower-triangle masking.
ScoreTensor fuse_scores(const Matrix& y, int n, int n_grids, int n_tags);

// Backward through both heads and the pair representation.  d_y is the
// gradient of the loss w.r.t. the raw logits (masked cells must carry zero).
// Parameter gradients accumulate into grad; the return value is dL/dh.
Matrix scorer_backward(const Matrix& h, const ScorerParams& p,
                       const ScorerOptions& opt, const ScorerCache& cache,
                       const Matrix& d_y, ScorerParams& grad,
                       const Matrix* v_dropout = nullptr);

// Zero-initialized parameter set with the same shapes as p (gradient buffer).
ScorerParams scorer_zero_like(const ScorerParams& p);

}  // namespace ecqed
