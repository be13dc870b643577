#include "skelssl/gru.hpp"

namespace skelssl {

GRUParams GRUParams::zeros(int input_dim, int hidden) {
  GRUParams p;
  p.w_update = Mat::Zero(input_dim, hidden);
  p.u_update = Mat::Zero(hidden, hidden);
  p.b_update = Mat::Zero(1, hidden);
  p.w_reset = Mat::Zero(input_dim, hidden);
  p.u_reset = Mat::Zero(hidden, hidden);
  p.b_reset = Mat::Zero(1, hidden);
  p.w_cand = Mat::Zero(input_dim, hidden);
  p.u_cand = Mat::Zero(hidden, hidden);
  p.b_cand = Mat::Zero(1, hidden);
  return p;
}

void GRUParams::collect(const std::string& prefix,
                        std::vector<std::pair<std::string, Mat*>>& out) {
  out.emplace_back(prefix + ".w_update", &w_update);
  out.emplace_back(prefix + ".u_update", &u_update);
  out.emplace_back(prefix + ".b_update", &b_update);
  out.emplace_back(prefix + ".w_reset", &w_reset);
  out.emplace_back(prefix + ".u_reset", &u_reset);
  out.emplace_back(prefix + ".b_reset", &b_reset);
  out.emplace_back(prefix + ".w_cand", &w_cand);
  out.emplace_back(prefix + ".u_cand", &u_cand);
  out.emplace_back(prefix + ".b_cand", &b_cand);
}

GRUVars bind(Tape& tape, const GRUParams& p) {
  GRUVars v;
  v.w_update = tape.leaf(p.w_update);
  v.u_update = tape.leaf(p.u_update);
  v.b_update = tape.leaf(p.b_update);
  v.w_reset = tape.leaf(p.w_reset);
  v.u_reset = tape.leaf(p.u_reset);
  v.b_reset = tape.leaf(p.b_reset);
  v.w_cand = tape.leaf(p.w_cand);
  v.u_cand = tape.leaf(p.u_cand);
  v.b_cand = tape.leaf(p.b_cand);
  return v;
}

DiffValue gru_cell(Tape& t, DiffValue x, DiffValue h_prev, const GRUVars& v) {
  if (x.cols() != v.w_update.rows()) {
    throw DimensionError("gru_cell: input width " + std::to_string(x.cols()) +
                         " does not match kernel rows " +
                         std::to_string(v.w_update.rows()));
  }
  if (h_prev.cols() != v.u_update.rows()) {
    throw DimensionError("gru_cell: state width " + std::to_string(h_prev.cols()) +
                         " does not match recurrent kernel rows " +
                         std::to_string(v.u_update.rows()));
  }
  DiffValue z = t.sigmoid(t.add_row(
      t.add(t.matmul(x, v.w_update), t.matmul(h_prev, v.u_update)), v.b_update));
  DiffValue r = t.sigmoid(t.add_row(
      t.add(t.matmul(x, v.w_reset), t.matmul(h_prev, v.u_reset)), v.b_reset));
  DiffValue cand = t.tanh(t.add_row(
      t.add(t.matmul(x, v.w_cand), t.matmul(t.mul(r, h_prev), v.u_cand)), v.b_cand));
  return t.add(t.mul(t.one_minus(z), h_prev), t.mul(z, cand));
}

// Mirrors gru_cell operation by operation so both paths agree bitwise.
Mat gru_cell_values(const Mat& x, const Mat& h_prev, const GRUParams& p) {
  auto sig = [](const Mat& m) {
    return Mat(m.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); }));
  };
  Mat xw = x * p.w_update;
  Mat hu = h_prev * p.u_update;
  Mat z = xw + hu;
  z.rowwise() += p.b_update.row(0);
  z = sig(z);

  xw = x * p.w_reset;
  hu = h_prev * p.u_reset;
  Mat r = xw + hu;
  r.rowwise() += p.b_reset.row(0);
  r = sig(r);

  xw = x * p.w_cand;
  Mat rh = r.cwiseProduct(h_prev);
  hu = rh * p.u_cand;
  Mat cand = xw + hu;
  cand.rowwise() += p.b_cand.row(0);
  cand = cand.array().tanh().matrix();

  Mat keep = (1.0 - z.array()).matrix().cwiseProduct(h_prev);
  Mat take = z.cwiseProduct(cand);
  return keep + take;
}

}  // namespace skelssl
