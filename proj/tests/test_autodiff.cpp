#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "skelssl/autodiff.hpp"
#include "skelssl/gru.hpp"
#include "test_helpers.hpp"

using namespace skelssl;
using testutil::random_gru;
using testutil::random_mat;

TEST_CASE("affine identity and zero-weight cases") {
  Tape t;
  DiffValue x = t.leaf(Mat::Identity(2, 2));
  DiffValue w = t.leaf(Mat::Identity(2, 2));
  DiffValue b = t.leaf(Mat::Zero(1, 2));
  CHECK(t.affine(x, w, b).value().isApprox(Mat::Identity(2, 2)));

  Tape t2;
  Mat xv(1, 2);
  xv << 1, 2;
  Mat bv(1, 2);
  bv << 3, 4;
  DiffValue y = t2.affine(t2.leaf(xv), t2.leaf(Mat::Zero(2, 2)), t2.leaf(bv));
  CHECK(y.value()(0, 0) == doctest::Approx(3));
  CHECK(y.value()(0, 1) == doctest::Approx(4));
}

TEST_CASE("affine rejects mismatched shapes, naming both") {
  Tape t;
  DiffValue x = t.leaf(Mat::Zero(2, 3));
  DiffValue w = t.leaf(Mat::Zero(4, 5));
  try {
    t.matmul(x, w);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("gradient of sum(affine) w.r.t. W matches finite differences") {
  std::mt19937_64 rng(7);
  Mat x = random_mat(3, 4, rng);
  Mat w = random_mat(4, 5, rng);
  Mat b = random_mat(1, 5, rng);
  auto build = [&](Tape& t) {
    GradCheckBuild out;
    DiffValue wv = t.leaf(w);
    DiffValue bv = t.leaf(b);
    out.root = t.sum(t.affine(t.constant(x), wv, bv));
    out.params = {wv, bv};
    return out;
  };
  CHECK(grad_check(build, {&w, &b}) < 1e-6);
}

TEST_CASE("sigmoid at zero is one half") {
  Tape t;
  CHECK(t.sigmoid(t.leaf(Mat::Zero(1, 1))).value()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("softmax is shift invariant on constant rows") {
  for (double c : {-3.0, 0.0, 41.5}) {
    Tape t;
    DiffValue y = t.softmax_rows(t.leaf(Mat::Constant(1, 3, c)));
    for (int i = 0; i < 3; ++i) {
      CHECK(y.value()(0, i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax rows are non-negative and sum to one") {
  std::mt19937_64 rng(11);
  Tape t;
  DiffValue y = t.softmax_rows(t.leaf(random_mat(6, 9, rng, 30.0)));
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    double sum = 0;
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      CHECK(y.value()(r, c) >= 0.0);
      sum += y.value()(r, c);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("tanh derivative at 0.3 equals 1 - tanh^2 and matches finite differences") {
  Mat x(1, 1);
  x << 0.3;
  Tape t;
  DiffValue xv = t.leaf(x);
  DiffValue y = t.tanh(xv);
  t.backward(t.sum(y));
  const double expected = 1.0 - std::tanh(0.3) * std::tanh(0.3);
  CHECK(std::abs(xv.grad()(0, 0) - expected) < 1e-12);

  const double h = 1e-6;
  const double fd = (std::tanh(0.3 + h) - std::tanh(0.3 - h)) / (2 * h);
  CHECK(std::abs(xv.grad()(0, 0) - fd) < 1e-8);
}

TEST_CASE("non-finite inputs are rejected") {
  Tape t;
  Mat bad(1, 2);
  bad << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(t.sigmoid(t.leaf(bad)), NumericError);
  CHECK_THROWS_AS(t.tanh(t.leaf(bad)), NumericError);
  CHECK_THROWS_AS(t.softmax_rows(t.leaf(bad)), NumericError);
}

TEST_CASE("backward accumulates over multiple consumers") {
  // y = x + x: two consumers of the same node, gradient must sum to 2.
  Tape t;
  DiffValue x = t.leaf(Mat::Constant(1, 1, 3.0));
  t.backward(t.add(x, x));
  CHECK(x.grad()(0, 0) == doctest::Approx(2.0));

  // Diamond: f = (x*x) + (x*x) built from shared subexpressions.
  Tape t2;
  DiffValue x2 = t2.leaf(Mat::Constant(1, 1, 2.0));
  DiffValue sq = t2.mul(x2, x2);
  t2.backward(t2.add(sq, sq));
  CHECK(x2.grad()(0, 0) == doctest::Approx(8.0));  // d/dx 2x^2 = 4x
}

TEST_CASE("every primitive matches finite differences at random points") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Mat a = random_mat(3, 4, rng);
    Mat b = random_mat(4, 3, rng);
    Mat c = random_mat(3, 4, rng);
    Mat bias = random_mat(1, 4, rng);
    // One chain touching matmul, transpose, add, sub, mul, scale, one_minus,
    // add_row, sigmoid, tanh, softmax, row/select/concat, mean and normalize.
    auto build2 = [&](Tape& t) {
      GradCheckBuild out;
      DiffValue av = t.leaf(a);     // 3x4
      DiffValue bv = t.leaf(b);     // 4x3
      DiffValue cv = t.leaf(c);     // 3x4
      DiffValue biasv = t.leaf(bias);  // 1x4
      DiffValue prod = t.matmul(av, bv);                       // 3x3
      DiffValue wide = t.matmul(t.tanh(prod), t.one_minus(t.sigmoid(cv)));  // 3x3*3x4
      DiffValue shifted = t.add_row(wide, biasv);              // 3x4
      DiffValue mixed = t.mul(t.sub(shifted, av), t.scale(cv, 0.7));
      DiffValue soft = t.softmax_rows(mixed);
      DiffValue stacked = t.concat_rows(std::vector<DiffValue>{
          t.row(soft, 0), t.row(soft, 2), t.mean_rows(soft)});
      DiffValue norm = t.normalize_rows(t.add(stacked, t.constant(Mat::Constant(3, 4, 0.5))));
      DiffValue picked = t.select_cols(norm, {0, 2, 3});
      DiffValue joined = t.concat_cols(picked, t.transpose(t.constant(Mat::Ones(3, 3))));
      out.root = t.sum(t.mul(joined, joined));
      out.params = {av, bv, cv, biasv};
      return out;
    };
    CHECK(grad_check(build2, {&a, &b, &c, &bias}) < 1e-5);
  }
}

TEST_CASE("gru cell with zero parameters and zero state stays at zero") {
  GRUParams p = GRUParams::zeros(3, 4);
  Tape t;
  GRUVars v = bind(t, p);
  std::mt19937_64 rng(5);
  DiffValue h = gru_cell(t, t.constant(random_mat(1, 3, rng)),
                         t.constant(Mat::Zero(1, 4)), v);
  CHECK(h.value().isZero(0.0));
}

TEST_CASE("gru cell matches the scalar reference implementation") {
  std::mt19937_64 rng(17);
  GRUParams p = random_gru(3, 4, rng);
  Mat x = random_mat(1, 3, rng);
  Mat h0 = random_mat(1, 4, rng);

  Tape t;
  DiffValue h = gru_cell(t, t.constant(x), t.constant(h0), bind(t, p));

  std::vector<double> xs(x.data(), x.data() + 3);
  std::vector<double> hs(4);
  for (int i = 0; i < 4; ++i) hs[static_cast<std::size_t>(i)] = h0(0, i);
  const std::vector<double> expected = testutil::reference_gru_step(xs, hs, p);
  for (int i = 0; i < 4; ++i) {
    CHECK(h.value()(0, i) == doctest::Approx(expected[static_cast<std::size_t>(i)])
                                 .epsilon(1e-12));
  }
}

TEST_CASE("gru unroll gradient matches finite differences through time") {
  std::mt19937_64 rng(29);
  GRUParams p = random_gru(3, 4, rng);
  std::vector<Mat> inputs;
  for (int step = 0; step < 5; ++step) inputs.push_back(random_mat(1, 3, rng));

  std::vector<std::pair<std::string, Mat*>> entries;
  p.collect("gru", entries);
  std::vector<Mat*> params;
  for (auto& [name, mat] : entries) params.push_back(mat);

  auto build = [&](Tape& t) {
    GradCheckBuild out;
    GRUVars v = bind(t, p);
    out.params = {v.w_update, v.u_update, v.b_update, v.w_reset, v.u_reset,
                  v.b_reset,  v.w_cand,   v.u_cand,   v.b_cand};
    DiffValue h = t.constant(Mat::Zero(1, 4));
    for (const Mat& x : inputs) h = gru_cell(t, t.constant(x), h, v);
    out.root = t.sum(t.mul(h, h));  // ||h_T||^2
    return out;
  };
  CHECK(grad_check(build, params) < 1e-5);
}

TEST_CASE("gru cell is bitwise deterministic") {
  std::mt19937_64 rng(31);
  GRUParams p = random_gru(5, 6, rng);
  Mat x = random_mat(1, 5, rng);
  Mat h0 = random_mat(1, 6, rng);
  Mat first, second;
  {
    Tape t;
    first = gru_cell(t, t.constant(x), t.constant(h0), bind(t, p)).value();
  }
  {
    Tape t;
    second = gru_cell(t, t.constant(x), t.constant(h0), bind(t, p)).value();
  }
  CHECK(first == second);
}

TEST_CASE("cosine similarity basics") {
  std::mt19937_64 rng(37);
  Mat x = random_mat(1, 6, rng);
  {
    Tape t;
    DiffValue s = t.cosine_sim(t.leaf(x), t.leaf(x));
    CHECK(std::abs(s.value()(0, 0) - 1.0) < 1e-12);
  }
  {
    Tape t;
    Mat e1(1, 2), e2(1, 2);
    e1 << 1, 0;
    e2 << 0, 1;
    CHECK(t.cosine_sim(t.leaf(e1), t.leaf(e2)).value()(0, 0) == doctest::Approx(0.0));
  }
  for (double alpha : {2.5, -0.75}) {
    Tape t;
    DiffValue s = t.cosine_sim(t.leaf(x), t.leaf(Mat(alpha * x)));
    CHECK(std::abs(s.value()(0, 0) - (alpha > 0 ? 1.0 : -1.0)) < 1e-12);
  }
}

TEST_CASE("cosine similarity rejects zero-norm vectors") {
  Tape t;
  std::mt19937_64 rng(41);
  CHECK_THROWS_AS(t.cosine_sim(t.leaf(Mat::Zero(1, 4)), t.leaf(random_mat(1, 4, rng))),
                  DegenerateVectorError);
}

TEST_CASE("cosine similarity is differentiable in both arguments") {
  std::mt19937_64 rng(43);
  Mat x = random_mat(1, 5, rng);
  Mat y = random_mat(1, 5, rng);
  auto build = [&](Tape& t) {
    GradCheckBuild out;
    DiffValue xv = t.leaf(x);
    DiffValue yv = t.leaf(y);
    out.root = t.cosine_sim(xv, yv);
    out.params = {xv, yv};
    return out;
  };
  CHECK(grad_check(build, {&x, &y}) < 1e-7);
}

TEST_CASE("grad_check is exact for linear functions") {
  std::mt19937_64 rng(47);
  Mat w = random_mat(4, 1, rng);
  Mat x = random_mat(1, 4, rng);
  auto build = [&](Tape& t) {
    GradCheckBuild out;
    DiffValue wv = t.leaf(w);
    out.root = t.sum(t.matmul(t.constant(x), wv));
    out.params = {wv};
    return out;
  };
  CHECK(grad_check(build, {&w}) <= 1e-10);
}

TEST_CASE("grad_check on a tanh chain stays under 1e-7 with step 1e-5") {
  std::mt19937_64 rng(53);
  Mat w1 = random_mat(3, 3, rng);
  Mat w2 = random_mat(3, 1, rng);
  Mat x = random_mat(1, 3, rng);
  auto build = [&](Tape& t) {
    GradCheckBuild out;
    DiffValue w1v = t.leaf(w1);
    DiffValue w2v = t.leaf(w2);
    out.root = t.sum(t.tanh(t.matmul(t.tanh(t.matmul(t.constant(x), w1v)), w2v)));
    out.params = {w1v, w2v};
    return out;
  };
  CHECK(grad_check(build, {&w1, &w2}, 1e-5) < 1e-7);
}

TEST_CASE("backward requires a scalar root and finite loss") {
  Tape t;
  DiffValue m = t.leaf(Mat::Zero(2, 2));
  CHECK_THROWS_AS(t.backward(m), DimensionError);
}
