#include "scorer.hpp"

#include <cmath>

namespace ecqed {

namespace {

// Population standard deviation (divide by the element count, not count-1).
double population_std(const Eigen::Ref<const Vector>& x, double& mean_out) {
  const double mu = x.mean();
  mean_out = mu;
  return std::sqrt((x.array() - mu).square().mean());
}

void check_heads(const ScorerOptions& opt) {
  if (!opt.use_mlp && !opt.use_biaffine) {
    throw ConfigError("at least one of the MLP and biaffine heads must be enabled");
  }
}

int head_width(const ScorerParams& p, const ScorerOptions& opt) {
  int k = -1;
  if (opt.use_mlp) k = static_cast<int>(p.mlp.w2.rows());
  if (opt.use_biaffine) {
    const int kb = p.biaffine.k();
    if (k >= 0 && k != kb) {
      throw NumericError("MLP and biaffine output widths disagree");
    }
    k = kb;
  }
  return k;
}

Matrix relu_mask(const Matrix& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

}  // namespace

Vector cln(const Vector& cond, const Vector& value, const ClnParams& p) {
  const Vector gamma = p.w_alpha * cond + p.b_alpha;
  const Vector lambda = p.w_beta * cond + p.b_beta;
  double mu = 0.0;
  const double sigma = population_std(value, mu);
  const Vector normalized = ((value.array() - mu) / (sigma + p.eps)).matrix();
  return gamma.cwiseProduct(normalized) + lambda;
}

Matrix scorer_forward(const Matrix& h, const ScorerParams& p,
                      const ScorerOptions& opt, ScorerCache* cache,
                      const Matrix* v_dropout) {
  check_heads(opt);
  const int n = static_cast<int>(h.rows());
  const int dim = static_cast<int>(h.cols());
  if (n == 0) throw NumericError("scorer requires at least one utterance");
  const int k = head_width(p, opt);

  ScorerCache local;
  ScorerCache& c = cache != nullptr ? *cache : local;
  c = ScorerCache{};
  c.n = n;

  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(n) * n, k);

  if (opt.use_mlp) {
    if (p.cln.w_alpha.cols() != dim || p.mlp.w1.cols() != dim) {
      throw NumericError("scorer shape mismatch in the MLP head");
    }
    c.gamma = h * p.cln.w_alpha.transpose();
    c.gamma.rowwise() += p.cln.b_alpha.transpose();
    c.lambda = h * p.cln.w_beta.transpose();
    c.lambda.rowwise() += p.cln.b_beta.transpose();
    c.u.resize(n, dim);
    c.sigma.resize(n);
    for (int r = 0; r < n; ++r) {
      double mu = 0.0;
      c.sigma(r) = population_std(h.row(r).transpose(), mu);
      c.u.row(r) = (h.row(r).array() - mu) / (c.sigma(r) + p.cln.eps);
    }
    c.v.resize(static_cast<Eigen::Index>(n) * n, dim);
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) {
        c.v.row(r * n + col) =
            c.gamma.row(col).cwiseProduct(c.u.row(r)) + c.lambda.row(col);
      }
    }
    c.v_in = v_dropout != nullptr ? c.v.cwiseProduct(*v_dropout) : c.v;
    c.z1 = c.v_in * p.mlp.w1.transpose();
    c.z1.rowwise() += p.mlp.b1.transpose();
    c.a1 = c.z1.cwiseMax(0.0);
    y += c.a1 * p.mlp.w2.transpose();
    y.rowwise() += p.mlp.b2.transpose();
  }

  if (opt.use_biaffine) {
    if (p.biaffine.emotion.w.cols() != dim || p.biaffine.cause.w.cols() != dim) {
      throw NumericError("scorer shape mismatch in the biaffine head");
    }
    const int dp = p.biaffine.d_p();
    c.e_pre = h * p.biaffine.emotion.w.transpose();
    c.e_pre.rowwise() += p.biaffine.emotion.b.transpose();
    c.e_act = c.e_pre.cwiseMax(0.0);
    c.c_pre = h * p.biaffine.cause.w.transpose();
    c.c_pre.rowwise() += p.biaffine.cause.b.transpose();
    c.c_act = c.c_pre.cwiseMax(0.0);

    const Matrix le = c.e_act * p.biaffine.w.leftCols(dp).transpose();   // N x K
    const Matrix lc = c.c_act * p.biaffine.w.rightCols(dp).transpose();  // N x K
    for (int kk = 0; kk < k; ++kk) {
      // bk(i, j) = e_i^T U_k c_j with i the emotion index, j the cause index.
      const Matrix bk = c.e_act * p.biaffine.u[kk] * c.c_act.transpose();
      const double bias = p.biaffine.b(kk);
      for (int r = 0; r < n; ++r) {
        for (int col = 0; col < n; ++col) {
          y(r * n + col, kk) += bk(col, r) + le(col, kk) + lc(r, kk) + bias;
        }
      }
    }
  }

  if (!y.allFinite()) throw NumericError("scorer produced non-finite logits");
  return y;
}

ScoreTensor fuse_scores(const Matrix& y, int n, int n_grids, int n_tags) {
  const int k = n_grids * n_tags;
  if (y.rows() != static_cast<Eigen::Index>(n) * n || y.cols() != k) {
    throw NumericError("fuse_scores shape mismatch");
  }
  if (!y.allFinite()) throw NumericError("scores contain NaN/Inf");
  ScoreTensor st;
  st.n = n;
  st.n_grids = n_grids;
  st.n_tags = n_tags;
  st.logits.assign(static_cast<std::size_t>(n) * n * k, 0.0);
  st.probs.assign(st.logits.size(), 0.0);

  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      const int cell = r * n + col;
      for (int g = 0; g < n_grids; ++g) {
        const std::size_t base = st.offset(r, col, g, 0);
        for (int t = 0; t < n_tags; ++t) {
          st.logits[base + t] = y(cell, g * n_tags + t);
        }
        if (r > col) {
          // Invalid pair (cause after emotion): hard NONE.
          st.probs[base + st.none_tag()] = 1.0;
          continue;
        }
        double hi = st.logits[base];
        for (int t = 1; t < n_tags; ++t) hi = std::max(hi, st.logits[base + t]);
        double total = 0.0;
        for (int t = 0; t < n_tags; ++t) {
          st.probs[base + t] = std::exp(st.logits[base + t] - hi);
          total += st.probs[base + t];
        }
        for (int t = 0; t < n_tags; ++t) st.probs[base + t] /= total;
      }
    }
  }
  return st;
}

Matrix scorer_backward(const Matrix& h, const ScorerParams& p,
                       const ScorerOptions& opt, const ScorerCache& cache,
                       const Matrix& d_y, ScorerParams& grad,
                       const Matrix* v_dropout) {
  check_heads(opt);
  const int n = cache.n;
  const int dim = static_cast<int>(h.cols());
  Matrix d_h = Matrix::Zero(n, dim);

  if (opt.use_mlp) {
    grad.mlp.w2 += d_y.transpose() * cache.a1;
    grad.mlp.b2 += d_y.colwise().sum().transpose();
    const Matrix d_a1 = d_y * p.mlp.w2;
    const Matrix d_z1 = d_a1.cwiseProduct(relu_mask(cache.z1));
    grad.mlp.w1 += d_z1.transpose() * cache.v_in;
    grad.mlp.b1 += d_z1.colwise().sum().transpose();
    Matrix d_v = d_z1 * p.mlp.w1;
    if (v_dropout != nullptr) d_v = d_v.cwiseProduct(*v_dropout);

    Matrix d_gamma = Matrix::Zero(n, dim);
    Matrix d_lambda = Matrix::Zero(n, dim);
    Matrix d_u = Matrix::Zero(n, dim);
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < n; ++col) {
        const auto g = d_v.row(r * n + col);
        d_gamma.row(col) += g.cwiseProduct(cache.u.row(r));
        d_lambda.row(col) += g;
        d_u.row(r) += g.cwiseProduct(cache.gamma.row(col));
      }
    }
    grad.cln.w_alpha += d_gamma.transpose() * h;
    grad.cln.b_alpha += d_gamma.colwise().sum().transpose();
    grad.cln.w_beta += d_lambda.transpose() * h;
    grad.cln.b_beta += d_lambda.colwise().sum().transpose();
    d_h += d_gamma * p.cln.w_alpha + d_lambda * p.cln.w_beta;

    // Through the normalization: with u = (x - mu)/s, s = sigma + eps,
    // dx = (g - mean(g))/s - u * (g . u) / (dim * sigma).  The sigma term
    // vanishes for constant rows, where u is identically zero.
    for (int r = 0; r < n; ++r) {
      const double s = cache.sigma(r) + p.cln.eps;
      const auto g = d_u.row(r);
      Eigen::RowVectorXd dx = ((g.array() - g.mean()) / s).matrix();
      if (cache.sigma(r) > 1e-12) {
        const double gu = g.dot(cache.u.row(r));
        dx -= cache.u.row(r) * (gu / (dim * cache.sigma(r)));
      }
      d_h.row(r) += dx;
    }
  }

  if (opt.use_biaffine) {
    const int dp = p.biaffine.d_p();
    const int k = p.biaffine.k();
    Matrix d_e = Matrix::Zero(n, dp);
    Matrix d_c = Matrix::Zero(n, dp);
    Matrix d_le = Matrix::Zero(n, k);
    Matrix d_lc = Matrix::Zero(n, k);
    Matrix gk = Matrix::Zero(n, n);
    for (int kk = 0; kk < k; ++kk) {
      for (int r = 0; r < n; ++r) {
        for (int col = 0; col < n; ++col) {
          gk(col, r) = d_y(r * n + col, kk);
        }
      }
      grad.biaffine.u[kk] += cache.e_act.transpose() * gk * cache.c_act;
      d_e += gk * cache.c_act * p.biaffine.u[kk].transpose();
      d_c += gk.transpose() * cache.e_act * p.biaffine.u[kk];
      d_le.col(kk) = gk.rowwise().sum();
      d_lc.col(kk) = gk.colwise().sum().transpose();
    }
    grad.biaffine.b += d_y.colwise().sum().transpose();
    grad.biaffine.w.leftCols(dp) += d_le.transpose() * cache.e_act;
    grad.biaffine.w.rightCols(dp) += d_lc.transpose() * cache.c_act;
    d_e += d_le * p.biaffine.w.leftCols(dp);
    d_c += d_lc * p.biaffine.w.rightCols(dp);

    const Matrix d_e_pre = d_e.cwiseProduct(relu_mask(cache.e_pre));
    const Matrix d_c_pre = d_c.cwiseProduct(relu_mask(cache.c_pre));
    grad.biaffine.emotion.w += d_e_pre.transpose() * h;
    grad.biaffine.emotion.b += d_e_pre.colwise().sum().transpose();
    grad.biaffine.cause.w += d_c_pre.transpose() * h;
    grad.biaffine.cause.b += d_c_pre.colwise().sum().transpose();
    d_h += d_e_pre * p.biaffine.emotion.w + d_c_pre * p.biaffine.cause.w;
  }

  return d_h;
}

ScorerParams scorer_zero_like(const ScorerParams& p) {
  ScorerParams z;
  z.cln.w_alpha = Matrix::Zero(p.cln.w_alpha.rows(), p.cln.w_alpha.cols());
  z.cln.w_beta = Matrix::Zero(p.cln.w_beta.rows(), p.cln.w_beta.cols());
  z.cln.b_alpha = Vector::Zero(p.cln.b_alpha.size());
  z.cln.b_beta = Vector::Zero(p.cln.b_beta.size());
  z.cln.eps = p.cln.eps;
  z.mlp.w1 = Matrix::Zero(p.mlp.w1.rows(), p.mlp.w1.cols());
  z.mlp.b1 = Vector::Zero(p.mlp.b1.size());
  z.mlp.w2 = Matrix::Zero(p.mlp.w2.rows(), p.mlp.w2.cols());
  z.mlp.b2 = Vector::Zero(p.mlp.b2.size());
  z.biaffine.emotion.w =
      Matrix::Zero(p.biaffine.emotion.w.rows(), p.biaffine.emotion.w.cols());
  z.biaffine.emotion.b = Vector::Zero(p.biaffine.emotion.b.size());
  z.biaffine.cause.w =
      Matrix::Zero(p.biaffine.cause.w.rows(), p.biaffine.cause.w.cols());
  z.biaffine.cause.b = Vector::Zero(p.biaffine.cause.b.size());
  z.biaffine.u.resize(p.biaffine.u.size());
  for (std::size_t i = 0; i < p.biaffine.u.size(); ++i) {
    z.biaffine.u[i] = Matrix::Zero(p.biaffine.u[i].rows(), p.biaffine.u[i].cols());
  }
  z.biaffine.w = Matrix::Zero(p.biaffine.w.rows(), p.biaffine.w.cols());
  z.biaffine.b = Vector::Zero(p.biaffine.b.size());
  return z;
}

}  // namespace ecqed
