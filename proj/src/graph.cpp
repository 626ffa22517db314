#include "graph.hpp"

#include <unordered_map>

namespace ecqed {

const char* edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::DU:
      return "DU";
    case EdgeKind::SU:
      return "SU";
    case EdgeKind::UU:
      return "UU";
    case EdgeKind::SELF:
      return "SELF";
  }
  return "?";
}

int HeteroGraph::edge_count(EdgeKind kind) const {
  int count = 0;
  for (const Edge& e : edges) {
    if (e.kind == kind) ++count;
  }
  return count;
}

HeteroGraph build_graph(const Dialog& dialog, const GraphOptions& options) {
  const int n = dialog.size();
  if (n == 0) {
    throw DataError("cannot build graph for empty dialog '" + dialog.dialog_id + "'");
  }

  HeteroGraph g;
  g.n_utterances = n;
  g.speaker_of.resize(n);

  std::unordered_map<std::string, int> slot_of;
  for (int i = 0; i < n; ++i) {
    const std::string& name = dialog.utterances[i].speaker;
    auto it = slot_of.find(name);
    if (it == slot_of.end()) {
      it = slot_of.emplace(name, static_cast<int>(g.speaker_names.size())).first;
      g.speaker_names.push_back(name);
    }
    g.speaker_of[i] = it->second;
  }
  g.n_speakers = static_cast<int>(g.speaker_names.size());

  const int dialog_node = g.dialog_node();
  if (options.use_du_edges) {
    for (int i = 0; i < n; ++i) {
      g.edges.push_back({dialog_node, i, EdgeKind::DU});
    }
  }
  if (options.use_su_edges) {
    for (int i = 0; i < n; ++i) {
      g.edges.push_back({g.speaker_node(g.speaker_of[i]), i, EdgeKind::SU});
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    g.edges.push_back({i, i + 1, EdgeKind::UU});
  }
  for (int v = 0; v < g.n_nodes(); ++v) {
    g.edges.push_back({v, v, EdgeKind::SELF});
  }

  for (const Edge& e : g.edges) {
    auto& list = g.messages[static_cast<int>(e.kind)];
    if (e.kind == EdgeKind::SELF) {
      list.emplace_back(e.src, e.dst);
    } else {
      list.emplace_back(e.src, e.dst);
      list.emplace_back(e.dst, e.src);
    }
  }
  return g;
}

RgcnLayer rgcn_layer_zero(int d_in, int d_out) {
  RgcnLayer layer;
  for (int k = 0; k < kNumEdgeKinds; ++k) {
    layer.weight[k] = Matrix::Zero(d_out, d_in);
    layer.bias[k] = Vector::Zero(d_out);
  }
  return layer;
}

Matrix rgcn_layer_forward(const HeteroGraph& graph, const RgcnLayer& layer,
                          const Matrix& h_in, Matrix* pre_act) {
  const int nodes = graph.n_nodes();
  if (h_in.rows() != nodes || h_in.cols() != layer.d_in()) {
    throw NumericError("graph layer input shape mismatch");
  }
  Matrix acc = Matrix::Zero(nodes, layer.d_out());
  for (int k = 0; k < kNumEdgeKinds; ++k) {
    const auto& msgs = graph.messages[k];
    if (msgs.empty()) continue;
    const Matrix transformed = h_in * layer.weight[k].transpose();
    const auto bias = layer.bias[k].transpose();
    for (const auto& [from, to] : msgs) {
      acc.row(to) += transformed.row(from) + bias;
    }
  }
  if (pre_act != nullptr) *pre_act = acc;
  return acc.cwiseMax(0.0);
}

Matrix rgcn_layer_backward(const HeteroGraph& graph, const RgcnLayer& layer,
                           const Matrix& h_in, const Matrix& pre_act,
                           const Matrix& d_out, RgcnLayer& grad) {
  const Matrix d_pre =
      d_out.cwiseProduct((pre_act.array() > 0.0).cast<double>().matrix());
  Matrix d_in = Matrix::Zero(h_in.rows(), h_in.cols());
  for (int k = 0; k < kNumEdgeKinds; ++k) {
    const auto& msgs = graph.messages[k];
    if (msgs.empty()) continue;
    // Fold the scatter back onto source nodes: d_src collects the upstream
    // gradient each source fed into, then one matmul per kind recovers the
    // weight, bias and input gradients.
    Matrix d_src = Matrix::Zero(h_in.rows(), layer.d_out());
    for (const auto& [from, to] : msgs) {
      d_src.row(from) += d_pre.row(to);
    }
    grad.weight[k] += d_src.transpose() * h_in;
    grad.bias[k] += d_src.colwise().sum().transpose();
    d_in += d_src * layer.weight[k];
  }
  return d_in;
}

}  // namespace ecqed
