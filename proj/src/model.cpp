#include "model.hpp"

#include <cmath>
#include <utility>

namespace ecqed {

namespace {

void xavier_fill(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.uniform(-limit, limit);
  }
}

Matrix make_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                         Rng& rng) {
  const double keep = 1.0 - rate;
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  }
  return mask;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  if (cfg.hidden_size < 2) throw ConfigError("hidden_size must be at least 2");
  if (cfg.gcn_layers < 1) throw ConfigError("gcn_layers must be at least 1");
  const int d = cfg.hidden_size;
  Rng rng(seed);

  ModelParams p;
  p.speaker_table.resize(kSpeakerTableRows, d);
  for (Eigen::Index i = 0; i < p.speaker_table.size(); ++i) {
    p.speaker_table.data()[i] = 0.02 * rng.gaussian();
  }

  p.gcn.resize(cfg.gcn_layers);
  for (auto& layer : p.gcn) {
    layer = rgcn_layer_zero(d, d);
    for (int k = 0; k < kNumEdgeKinds; ++k) xavier_fill(layer.weight[k], rng);
  }

  auto& s = p.scorer;
  s.cln.w_alpha.resize(d, d);
  s.cln.w_beta.resize(d, d);
  xavier_fill(s.cln.w_alpha, rng);
  xavier_fill(s.cln.w_beta, rng);
  // Unit gain offset so the pair representation starts as plain layer norm.
  s.cln.b_alpha = Vector::Ones(d);
  s.cln.b_beta = Vector::Zero(d);

  const int k = cfg.n_classes();
  s.mlp.w1.resize(d, d);
  s.mlp.w2.resize(k, d);
  xavier_fill(s.mlp.w1, rng);
  xavier_fill(s.mlp.w2, rng);
  s.mlp.b1 = Vector::Zero(d);
  s.mlp.b2 = Vector::Zero(k);

  const int dp = cfg.d_p();
  s.biaffine.emotion.w.resize(dp, d);
  s.biaffine.cause.w.resize(dp, d);
  xavier_fill(s.biaffine.emotion.w, rng);
  xavier_fill(s.biaffine.cause.w, rng);
  s.biaffine.emotion.b = Vector::Zero(dp);
  s.biaffine.cause.b = Vector::Zero(dp);
  s.biaffine.u.resize(k);
  for (auto& u : s.biaffine.u) {
    u.resize(dp, dp);
    xavier_fill(u, rng);
  }
  s.biaffine.w.resize(k, 2 * dp);
  xavier_fill(s.biaffine.w, rng);
  s.biaffine.b = Vector::Zero(k);
  return p;
}

ModelParams zero_like(const ModelParams& p) {
  ModelParams z;
  z.speaker_table = Matrix::Zero(p.speaker_table.rows(), p.speaker_table.cols());
  z.gcn.reserve(p.gcn.size());
  for (const auto& layer : p.gcn) {
    z.gcn.push_back(rgcn_layer_zero(layer.d_in(), layer.d_out()));
  }
  z.scorer = scorer_zero_like(p.scorer);
  return z;
}

std::vector<ParamRef> enumerate_params(ModelParams& p) {
  std::vector<ParamRef> refs;
  auto add = [&refs](std::string name, double* data, Eigen::Index size) {
    refs.push_back({std::move(name), data, static_cast<std::size_t>(size), false});
  };
  add("speaker_table", p.speaker_table.data(), p.speaker_table.size());
  for (std::size_t l = 0; l < p.gcn.size(); ++l) {
    const std::string prefix = "gcn" + std::to_string(l) + ".";
    for (int k = 0; k < kNumEdgeKinds; ++k) {
      const std::string kind = edge_kind_name(static_cast<EdgeKind>(k));
      add(prefix + "w_" + kind, p.gcn[l].weight[k].data(), p.gcn[l].weight[k].size());
      add(prefix + "b_" + kind, p.gcn[l].bias[k].data(), p.gcn[l].bias[k].size());
    }
  }
  auto& s = p.scorer;
  add("cln.w_alpha", s.cln.w_alpha.data(), s.cln.w_alpha.size());
  add("cln.b_alpha", s.cln.b_alpha.data(), s.cln.b_alpha.size());
  add("cln.w_beta", s.cln.w_beta.data(), s.cln.w_beta.size());
  add("cln.b_beta", s.cln.b_beta.data(), s.cln.b_beta.size());
  add("mlp.w1", s.mlp.w1.data(), s.mlp.w1.size());
  add("mlp.b1", s.mlp.b1.data(), s.mlp.b1.size());
  add("mlp.w2", s.mlp.w2.data(), s.mlp.w2.size());
  add("mlp.b2", s.mlp.b2.data(), s.mlp.b2.size());
  add("biaffine.emotion.w", s.biaffine.emotion.w.data(), s.biaffine.emotion.w.size());
  add("biaffine.emotion.b", s.biaffine.emotion.b.data(), s.biaffine.emotion.b.size());
  add("biaffine.cause.w", s.biaffine.cause.w.data(), s.biaffine.cause.w.size());
  add("biaffine.cause.b", s.biaffine.cause.b.data(), s.biaffine.cause.b.size());
  for (std::size_t k = 0; k < s.biaffine.u.size(); ++k) {
    add("biaffine.u" + std::to_string(k), s.biaffine.u[k].data(),
        s.biaffine.u[k].size());
  }
  add("biaffine.w", s.biaffine.w.data(), s.biaffine.w.size());
  add("biaffine.b", s.biaffine.b.data(), s.biaffine.b.size());
  return refs;
}

Matrix model_forward(const Dialog& dialog, const Matrix& x,
                     const ModelParams& p, const ModelConfig& cfg,
                     ModelCache* cache, double dropout, Rng* rng) {
  const int n = dialog.size();
  if (x.rows() != n || x.cols() != cfg.hidden_size) {
    throw NumericError("encoder output shape mismatch for dialog '" +
                       dialog.dialog_id + "'");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (dropout > 0.0 && rng == nullptr) {
    throw ConfigError("dropout requires a random stream");
  }

  ModelCache local;
  ModelCache& c = cache != nullptr ? *cache : local;
  c = ModelCache{};

  if (cfg.use_sshg) {
    c.graph = build_graph(dialog, cfg.graph_options());
    const int nodes = c.graph.n_nodes();
    c.features.resize(nodes, cfg.hidden_size);
    c.features.topRows(n) = x;
    for (int s = 0; s < c.graph.n_speakers; ++s) {
      const int row = std::min(s, kSpeakerTableRows - 1);
      c.features.row(c.graph.speaker_node(s)) = p.speaker_table.row(row);
    }
    c.features.row(c.graph.dialog_node()) = x.colwise().mean();

    Matrix h = c.features;
    c.pre_act.resize(p.gcn.size());
    c.drop_mask.resize(p.gcn.size());
    for (std::size_t l = 0; l < p.gcn.size(); ++l) {
      c.layer_in.push_back(h);
      Matrix out = rgcn_layer_forward(c.graph, p.gcn[l], h, &c.pre_act[l]);
      if (dropout > 0.0) {
        c.drop_mask[l] = make_dropout_mask(out.rows(), out.cols(), dropout, *rng);
        out = out.cwiseProduct(c.drop_mask[l]);
      }
      h = std::move(out);
    }
    c.h = h.topRows(n);
  } else {
    c.h = x;
  }

  const Matrix* v_mask = nullptr;
  if (dropout > 0.0 && cfg.use_mlp) {
    c.v_mask = make_dropout_mask(static_cast<Eigen::Index>(n) * n,
                                 cfg.hidden_size, dropout, *rng);
    v_mask = &c.v_mask;
  }
  return scorer_forward(c.h, p.scorer, cfg.scorer_options(), &c.scorer, v_mask);
}

Matrix model_backward(const Matrix& x, const ModelParams& p,
                      const ModelConfig& cfg, const ModelCache& cache,
                      const Matrix& d_y, ModelParams& grad) {
  const int n = static_cast<int>(cache.h.rows());
  const Matrix* v_mask = cache.v_mask.size() > 0 ? &cache.v_mask : nullptr;
  Matrix d_h = scorer_backward(cache.h, p.scorer, cfg.scorer_options(),
                               cache.scorer, d_y, grad.scorer, v_mask);
  if (!cfg.use_sshg) return d_h;

  Matrix d_node = Matrix::Zero(cache.graph.n_nodes(), x.cols());
  d_node.topRows(n) = d_h;
  for (int l = static_cast<int>(p.gcn.size()) - 1; l >= 0; --l) {
    if (cache.drop_mask[l].size() > 0) {
      d_node = d_node.cwiseProduct(cache.drop_mask[l]);
    }
    d_node = rgcn_layer_backward(cache.graph, p.gcn[l], cache.layer_in[l],
                                 cache.pre_act[l], d_node, grad.gcn[l]);
  }

  // Initial features: utterance rows come straight from x, the dialog node is
  // the mean of x's rows, speaker rows come from the table.
  Matrix d_x = d_node.topRows(n);
  const Eigen::RowVectorXd d_dialog =
      d_node.row(cache.graph.dialog_node()) / static_cast<double>(n);
  d_x.rowwise() += d_dialog;
  for (int s = 0; s < cache.graph.n_speakers; ++s) {
    const int row = std::min(s, kSpeakerTableRows - 1);
    grad.speaker_table.row(row) += d_node.row(cache.graph.speaker_node(s));
  }
  return d_x;
}

QuadrupleSet decode_scores(const ScoreTensor& scores, bool one_grid) {
  const int n = scores.n;
  auto argmax_tag = [&scores](int row, int col, int grid) {
    int best = 0;
    double best_p = scores.prob(row, col, grid, 0);
    for (int t = 1; t < scores.n_tags; ++t) {
      const double pt = scores.prob(row, col, grid, t);
      if (pt > best_p) {
        best_p = pt;
        best = t;
      }
    }
    return best;
  };

  if (one_grid) {
    OneGridTagging grid(n);
    for (int r = 0; r < n; ++r) {
      for (int c = r; c < n; ++c) {
        const int t = argmax_tag(r, c, 0);
        if (t != kOneGridNone) grid.set(r, c, t);
      }
    }
    return decode_one_grid(grid);
  }

  TagGridSet grids(n);
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      for (int g = 0; g < scores.n_grids; ++g) {
        const int t = argmax_tag(r, c, g);
        if (t != static_cast<int>(Tag::NONE)) {
          grids.set(static_cast<EmotionType>(g), r, c, static_cast<Tag>(t));
        }
      }
    }
  }
  return decode_grids(grids);
}

}  // namespace ecqed
