#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "encoder.hpp"
#include "types.hpp"

namespace ecqed {

// Edge kinds of the heterogeneous dialog graph.  DU links the dialog node to
// each utterance, SU links each utterance to its speaker, UU links consecutive
// utterances, SELF is a self loop on every node.
enum class EdgeKind { DU = 0, SU = 1, UU = 2, SELF = 3 };
inline constexpr int kNumEdgeKinds = 4;

const char* edge_kind_name(EdgeKind kind);

struct Edge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::SELF;
};

struct GraphOptions {
  bool use_du_edges = true;
  bool use_su_edges = true;
};

// Node layout: utterances occupy 0..N-1, speakers (by first appearance)
// N..N+S-1, the dialog node is last.  DU/SU/UU edges are stored once and
// expanded into both directions for message passing; SELF loops fire once.
struct HeteroGraph {
  int n_utterances = 0;
  int n_speakers = 0;
  std::vector<std::string> speaker_names;  // index = speaker slot
  std::vector<int> speaker_of;             // utterance index -> speaker slot
  std::vector<Edge> edges;
  std::array<std::vector<std::pair<int, int>>, kNumEdgeKinds> messages;

  int n_nodes() const { return n_utterances + n_speakers + 1; }
  int dialog_node() const { return n_utterances + n_speakers; }
  int speaker_node(int slot) const { return n_utterances + slot; }
  int edge_count(EdgeKind kind) const;
};

// Builds the graph topology for one dialog.  Node features are assembled
// separately (see model.cpp) so learned speaker embeddings stay in the
// parameter set.
HeteroGraph build_graph(const Dialog& dialog, const GraphOptions& options = {});

// One relational graph-convolution layer: a weight/bias pair per edge kind.
struct RgcnLayer {
  std::array<Matrix, kNumEdgeKinds> weight;  // d_out x d_in
  std::array<Vector, kNumEdgeKinds> bias;    // d_out

  int d_in() const { return static_cast<int>(weight[0].cols()); }
  int d_out() const { return static_cast<int>(weight[0].rows()); }
};

RgcnLayer rgcn_layer_zero(int d_in, int d_out);

// Node update: h'_n = relu(sum over kinds k, messages v->n of W_k h_v + b_k).
// Messages are unnormalised; every directed message contributes its own bias
// term.  When pre_act is given the pre-activation sums are stored for the
// backward pass.
Matrix rgcn_layer_forward(const HeteroGraph& graph, const RgcnLayer& layer,
                          const Matrix& h_in, Matrix* pre_act = nullptr);

// Backward through one layer.  Accumulates parameter gradients into grad
// (shapes must match the layer) and returns the gradient w.r.t. h_in.
Matrix rgcn_layer_backward(const HeteroGraph& graph, const RgcnLayer& layer,
                           const Matrix& h_in, const Matrix& pre_act,
                           const Matrix& d_out, RgcnLayer& grad);

}  // namespace ecqed
