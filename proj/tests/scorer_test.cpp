#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "rng.hpp"
#include "scorer.hpp"

using namespace ecqed;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1, 1);
  }
  return m;
}

Vector random_vector(Rng& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-1, 1);
  return v;
}

ScorerParams random_params(Rng& rng, int d, int d_hidden, int d_p, int k) {
  ScorerParams p;
  p.cln.w_alpha = random_matrix(rng, d, d);
  p.cln.w_beta = random_matrix(rng, d, d);
  p.cln.b_alpha = random_vector(rng, d);
  p.cln.b_beta = random_vector(rng, d);
  p.mlp.w1 = random_matrix(rng, d_hidden, d);
  p.mlp.b1 = random_vector(rng, d_hidden);
  p.mlp.w2 = random_matrix(rng, k, d_hidden);
  p.mlp.b2 = random_vector(rng, k);
  p.biaffine.emotion.w = random_matrix(rng, d_p, d);
  p.biaffine.emotion.b = random_vector(rng, d_p);
  p.biaffine.cause.w = random_matrix(rng, d_p, d);
  p.biaffine.cause.b = random_vector(rng, d_p);
  for (int kk = 0; kk < k; ++kk) p.biaffine.u.push_back(random_matrix(rng, d_p, d_p));
  p.biaffine.w = random_matrix(rng, k, 2 * d_p);
  p.biaffine.b = random_vector(rng, k);
  return p;
}

// Scalar-loop re-implementation of the forward pass, kept deliberately dumb.
Matrix brute_force_scorer(const Matrix& h, const ScorerParams& p,
                          const ScorerOptions& opt) {
  const int n = static_cast<int>(h.rows());
  const int d = static_cast<int>(h.cols());
  const int k = opt.use_mlp ? static_cast<int>(p.mlp.b2.size())
                            : static_cast<int>(p.biaffine.b.size());
  Matrix y = Matrix::Zero(n * n, k);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      // normalize the cause row
      double mean = 0;
      for (int i = 0; i < d; ++i) mean += h(r, i);
      mean /= d;
      double var = 0;
      for (int i = 0; i < d; ++i) var += (h(r, i) - mean) * (h(r, i) - mean);
      var /= d;
      const double s = std::sqrt(var) + p.cln.eps;
      std::vector<double> v(d);
      for (int i = 0; i < d; ++i) {
        double gain = p.cln.b_alpha(i);
        double off = p.cln.b_beta(i);
        for (int j = 0; j < d; ++j) {
          gain += p.cln.w_alpha(i, j) * h(c, j);
          off += p.cln.w_beta(i, j) * h(c, j);
        }
        v[i] = gain * (h(r, i) - mean) / s + off;
      }
      for (int kk = 0; kk < k; ++kk) {
        double sum = 0;
        if (opt.use_mlp) {
          const int dh = static_cast<int>(p.mlp.b1.size());
          for (int m = 0; m < dh; ++m) {
            double z = p.mlp.b1(m);
            for (int i = 0; i < d; ++i) z += p.mlp.w1(m, i) * v[i];
            if (z > 0) sum += p.mlp.w2(kk, m) * z;
          }
          sum += p.mlp.b2(kk);
        }
        if (opt.use_biaffine) {
          const int dp = p.biaffine.d_p();
          std::vector<double> e(dp), cc(dp);
          for (int m = 0; m < dp; ++m) {
            double ze = p.biaffine.emotion.b(m);
            double zc = p.biaffine.cause.b(m);
            for (int i = 0; i < d; ++i) {
              ze += p.biaffine.emotion.w(m, i) * h(c, i);
              zc += p.biaffine.cause.w(m, i) * h(r, i);
            }
            e[m] = ze > 0 ? ze : 0;
            cc[m] = zc > 0 ? zc : 0;
          }
          double bi = p.biaffine.b(kk);
          for (int a = 0; a < dp; ++a) {
            for (int b = 0; b < dp; ++b) bi += e[a] * p.biaffine.u[kk](a, b) * cc[b];
          }
          for (int m = 0; m < dp; ++m) {
            bi += p.biaffine.w(kk, m) * e[m];
            bi += p.biaffine.w(kk, dp + m) * cc[m];
          }
          sum += bi;
        }
        y(r * n + c, kk) = sum;
      }
    }
  }
  return y;
}

void for_each_slot(ScorerParams& p, const ScorerOptions& opt,
                   const std::function<void(double*, const char*)>& fn) {
  auto walk_matrix = [&](Matrix& m, const char* name) {
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) fn(&m(r, c), name);
    }
  };
  auto walk_vector = [&](Vector& v, const char* name) {
    for (int i = 0; i < v.size(); ++i) fn(&v(i), name);
  };
  walk_matrix(p.cln.w_alpha, "w_alpha");
  walk_matrix(p.cln.w_beta, "w_beta");
  walk_vector(p.cln.b_alpha, "b_alpha");
  walk_vector(p.cln.b_beta, "b_beta");
  if (opt.use_mlp) {
    walk_matrix(p.mlp.w1, "mlp.w1");
    walk_vector(p.mlp.b1, "mlp.b1");
    walk_matrix(p.mlp.w2, "mlp.w2");
    walk_vector(p.mlp.b2, "mlp.b2");
  }
  if (opt.use_biaffine) {
    walk_matrix(p.biaffine.emotion.w, "emotion.w");
    walk_vector(p.biaffine.emotion.b, "emotion.b");
    walk_matrix(p.biaffine.cause.w, "cause.w");
    walk_vector(p.biaffine.cause.b, "cause.b");
    for (auto& u : p.biaffine.u) walk_matrix(u, "biaffine.u");
    walk_matrix(p.biaffine.w, "biaffine.w");
    walk_vector(p.biaffine.b, "biaffine.b");
  }
}

double slot_by_ref(ScorerParams& grad, ScorerParams& p, const ScorerOptions& opt,
                   double* slot) {
  double found = 0.0;
  // mirrors the walking order: grads and params share shapes
  std::vector<double*> param_slots, grad_slots;
  for_each_slot(p, opt, [&](double* s, const char*) { param_slots.push_back(s); });
  for_each_slot(grad, opt, [&](double* s, const char*) { grad_slots.push_back(s); });
  for (size_t i = 0; i < param_slots.size(); ++i) {
    if (param_slots[i] == slot) {
      found = *grad_slots[i];
      break;
    }
  }
  return found;
}

}  // namespace

TEST_CASE("cln normalizes with the population std") {
  // identity gain and zero offset: pure normalization of (1, 3)
  ClnParams p;
  p.w_alpha = Matrix::Zero(2, 2);
  p.w_beta = Matrix::Zero(2, 2);
  p.b_alpha = Vector::Ones(2);
  p.b_beta = Vector::Zero(2);

  Vector cond(2), value(2);
  cond << 0.3, -0.8;  // ignored with zero projection weights
  value << 1.0, 3.0;
  const Vector v = cln(cond, value, p);
  CHECK(v(0) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(v(1) == doctest::Approx(1.0).epsilon(1e-4));
  // eps keeps |v| strictly below 1
  CHECK(std::abs(v(0)) < 1.0);
  CHECK(v(0) + v(1) == 0.0);
}

TEST_CASE("cln condition drives gain and offset") {
  ClnParams p;
  p.w_alpha = Matrix::Zero(2, 2);
  p.w_alpha(0, 0) = 2.0;  // gain_0 = 2 * cond_0 + 1
  p.w_beta = Matrix::Zero(2, 2);
  p.w_beta(1, 1) = 3.0;   // off_1 = 3 * cond_1
  p.b_alpha = Vector::Ones(2);
  p.b_beta = Vector::Zero(2);

  Vector cond(2), value(2);
  cond << 1.0, 2.0;
  value << 1.0, 3.0;
  const Vector v = cln(cond, value, p);
  const double s = 1.0 + kClnEps;
  CHECK(v(0) == doctest::Approx(3.0 * (-1.0 / s)).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(1.0 / s + 6.0).epsilon(1e-12));
}

TEST_CASE("cln handles a constant value vector") {
  ClnParams p;
  p.w_alpha = Matrix::Zero(3, 3);
  p.w_beta = Matrix::Zero(3, 3);
  p.b_alpha = Vector::Ones(3);
  p.b_beta = Vector::Zero(3);
  Vector cond = Vector::Zero(3);
  Vector value = Vector::Constant(3, 5.0);
  const Vector v = cln(cond, value, p);
  CHECK(v.cwiseAbs().maxCoeff() == 0.0);  // (x - mean) = 0, sigma guard holds
}

TEST_CASE("biaffine head hand oracle") {
  ScorerParams p;
  p.cln.w_alpha = Matrix::Zero(2, 2);
  p.cln.w_beta = Matrix::Zero(2, 2);
  p.cln.b_alpha = Vector::Ones(2);
  p.cln.b_beta = Vector::Zero(2);
  p.biaffine.emotion.w = Matrix::Zero(1, 2);
  p.biaffine.emotion.w(0, 0) = 1.0;
  p.biaffine.emotion.b = Vector::Zero(1);
  p.biaffine.cause.w = Matrix::Zero(1, 2);
  p.biaffine.cause.w(0, 1) = 1.0;
  p.biaffine.cause.b = Vector::Zero(1);
  p.biaffine.u.push_back(Matrix::Constant(1, 1, 2.0));
  p.biaffine.w = Matrix(1, 2);
  p.biaffine.w << 0.5, -1.0;  // emotion half first
  p.biaffine.b = Vector::Constant(1, 0.25);

  Matrix h(1, 2);
  h << 1.0, 3.0;
  const Matrix y = scorer_forward(h, p, {false, true});
  // e = relu(h*[1,0]) = 1, c = relu(h*[0,1]) = 3
  // y = 1*2*3 + 0.5*1 - 1.0*3 + 0.25 = 3.75
  CHECK(y.rows() == 1);
  CHECK(y.cols() == 1);
  CHECK(y(0, 0) == 3.75);
}

TEST_CASE("mlp head hand oracle") {
  ScorerParams p;
  p.cln.w_alpha = Matrix::Zero(2, 2);
  p.cln.w_beta = Matrix::Zero(2, 2);
  p.cln.b_alpha = Vector::Ones(2);
  p.cln.b_beta = Vector::Zero(2);
  p.mlp.w1 = Matrix(2, 2);
  p.mlp.w1 << 1.0, 1.0, 0.0, -1.0;
  p.mlp.b1 = Vector(2);
  p.mlp.b1 << 0.5, 0.0;
  p.mlp.w2 = Matrix(1, 2);
  p.mlp.w2 << 2.0, 7.0;
  p.mlp.b2 = Vector::Constant(1, -1.0);

  Matrix h(1, 2);
  h << 1.0, 3.0;
  ScorerCache cache;
  const Matrix y = scorer_forward(h, p, {true, false}, &cache);
  // v = normalize(1,3) sums to zero -> z1 = (0.5, -u1), a1 = (0.5, 0), y = 0
  CHECK(y(0, 0) == 0.0);
  CHECK(cache.sigma(0) == 1.0);
}

TEST_CASE("forward matches the scalar brute-force oracle") {
  Rng rng(99);
  for (const auto opt : {ScorerOptions{true, true}, ScorerOptions{true, false},
                         ScorerOptions{false, true}}) {
    const int n = 3, d = 4;
    const ScorerParams p = random_params(rng, d, 5, 2, 6);
    const Matrix h = random_matrix(rng, n, d);
    const Matrix got = scorer_forward(h, p, opt);
    const Matrix want = brute_force_scorer(h, p, opt);
    REQUIRE(got.rows() == want.rows());
    REQUIRE(got.cols() == want.cols());
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("disabling both heads is a config error") {
  Rng rng(1);
  const ScorerParams p = random_params(rng, 2, 2, 1, 2);
  const Matrix h = random_matrix(rng, 2, 2);
  CHECK_THROWS_AS(scorer_forward(h, p, {false, false}), ConfigError);
}

TEST_CASE("head width mismatch is a numeric error") {
  Rng rng(2);
  ScorerParams p = random_params(rng, 2, 2, 1, 3);
  // rebuild the biaffine head with a different output width
  p.biaffine.u.clear();
  p.biaffine.u.push_back(Matrix::Zero(1, 1));
  p.biaffine.u.push_back(Matrix::Zero(1, 1));
  p.biaffine.w = Matrix::Zero(2, 2);
  p.biaffine.b = Vector::Zero(2);
  const Matrix h = random_matrix(rng, 2, 2);
  CHECK_THROWS_AS(scorer_forward(h, p, {true, true}), NumericError);
}

TEST_CASE("fuse_scores: softmax per cell and grid, lower triangle forced NONE") {
  const int n = 2, n_grids = 2, n_tags = 3;
  Matrix y = Matrix::Zero(n * n, n_grids * n_tags);
  y.row(0 * n + 1) << 0, 0, 0, 1000, 1000, 1000;  // huge logits stay stable
  const ScoreTensor t = fuse_scores(y, n, n_grids, n_tags);

  CHECK(t.n == n);
  CHECK(t.none_tag() == 2);
  for (int g = 0; g < n_grids; ++g) {
    for (int tag = 0; tag < n_tags; ++tag) {
      CHECK(t.prob(0, 0, g, tag) == doctest::Approx(1.0 / 3).epsilon(1e-12));
      CHECK(t.prob(0, 1, g, tag) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
  }
  // cell (1, 0) is below the diagonal
  for (int g = 0; g < n_grids; ++g) {
    CHECK(t.prob(1, 0, g, t.none_tag()) == 1.0);
    CHECK(t.prob(1, 0, g, 0) == 0.0);
  }
  // raw logits are preserved
  CHECK(t.logit(0, 1, 1, 0) == 1000.0);

  double sum = 0;
  for (int tag = 0; tag < n_tags; ++tag) sum += t.prob(1, 1, 0, tag);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fuse_scores rejects non-finite logits") {
  Matrix y = Matrix::Zero(1, 5);
  y(0, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fuse_scores(y, 1, 1, 5), NumericError);
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(1234);
  const int n = 3, d = 4, k = 5;
  for (const auto opt : {ScorerOptions{true, true}, ScorerOptions{true, false},
                         ScorerOptions{false, true}}) {
    ScorerParams p = random_params(rng, d, 4, 2, k);
    Matrix h = random_matrix(rng, n, d);
    const Matrix c = random_matrix(rng, n * n, k);  // loss = sum(c o y)

    auto loss_of = [&]() { return (c.cwiseProduct(scorer_forward(h, p, opt))).sum(); };

    ScorerCache cache;
    scorer_forward(h, p, opt, &cache);
    ScorerParams grad = scorer_zero_like(p);
    const Matrix d_h = scorer_backward(h, p, opt, cache, c, grad);

    const double eps = 1e-6;
    double worst = 0.0;
    for_each_slot(p, opt, [&](double* slot, const char*) {
      const double saved = *slot;
      *slot = saved + eps;
      const double up = loss_of();
      *slot = saved - eps;
      const double down = loss_of();
      *slot = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = slot_by_ref(grad, p, opt, slot);
      const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    });
    INFO("param gradients, use_mlp=", opt.use_mlp, " use_biaffine=", opt.use_biaffine);
    CHECK(worst <= 1e-6);

    worst = 0.0;
    for (int r = 0; r < n; ++r) {
      for (int cc = 0; cc < d; ++cc) {
        const double saved = h(r, cc);
        h(r, cc) = saved + eps;
        const double up = loss_of();
        h(r, cc) = saved - eps;
        const double down = loss_of();
        h(r, cc) = saved;
        const double numeric = (up - down) / (2 * eps);
        const double analytic = d_h(r, cc);
        const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
      }
    }
    INFO("input gradients, use_mlp=", opt.use_mlp, " use_biaffine=", opt.use_biaffine);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("backward with a dropout mask on the pair representation") {
  Rng rng(4321);
  const int n = 2, d = 3, k = 4;
  ScorerParams p = random_params(rng, d, 3, 1, k);
  Matrix h = random_matrix(rng, n, d);
  const Matrix c = random_matrix(rng, n * n, k);
  Matrix mask(n * n, d);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int cc = 0; cc < d; ++cc) {
      mask(r, cc) = rng.uniform() < 0.3 ? 0.0 : 1.0 / 0.7;
    }
  }
  const ScorerOptions opt{true, true};

  auto loss_of = [&]() {
    return (c.cwiseProduct(scorer_forward(h, p, opt, nullptr, &mask))).sum();
  };

  ScorerCache cache;
  scorer_forward(h, p, opt, &cache, &mask);
  ScorerParams grad = scorer_zero_like(p);
  const Matrix d_h = scorer_backward(h, p, opt, cache, c, grad, &mask);

  const double eps = 1e-6;
  double worst = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int cc = 0; cc < d; ++cc) {
      const double saved = h(r, cc);
      h(r, cc) = saved + eps;
      const double up = loss_of();
      h(r, cc) = saved - eps;
      const double down = loss_of();
      h(r, cc) = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = d_h(r, cc);
      const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  CHECK(worst <= 1e-6);
}
