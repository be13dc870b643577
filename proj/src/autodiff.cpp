#include "skelssl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace skelssl {

namespace {

std::string shape_of(const Mat& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_finite(const Mat& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

const Mat& DiffValue::value() const {
  if (!tape_) throw Error("DiffValue: empty handle");
  return tape_->nodes_[id_].value;
}

const Mat& DiffValue::grad() const {
  if (!tape_) throw Error("DiffValue: empty handle");
  return tape_->nodes_[id_].grad;
}

Tape::Tape() { nodes_.reserve(1024); }

void Tape::check_owned(DiffValue v, const char* op) const {
  if (v.tape_ != this) {
    throw Error(std::string(op) + ": operand belongs to a different tape");
  }
}

DiffValue Tape::emplace(Mat value, std::function<void(Tape&, std::size_t)> backprop) {
  Node node;
  node.grad = Mat::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return DiffValue(this, nodes_.size() - 1);
}

DiffValue Tape::leaf(Mat value) { return emplace(std::move(value), nullptr); }

DiffValue Tape::matmul(DiffValue a, DiffValue b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_of(a.value()) +
                         " vs " + shape_of(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return emplace(a.value() * b.value(), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    t.grd(ia).noalias() += g * t.val(ib).transpose();
    t.grd(ib).noalias() += t.val(ia).transpose() * g;
  });
}

DiffValue Tape::transpose(DiffValue x) {
  check_owned(x, "transpose");
  const std::size_t ix = x.id();
  return emplace(x.value().transpose(), [ix](Tape& t, std::size_t self) {
    t.grd(ix) += t.nodes_[self].grad.transpose();
  });
}

DiffValue Tape::add(DiffValue a, DiffValue b) {
  check_owned(a, "add");
  check_owned(b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("add: shapes disagree: " + shape_of(a.value()) + " vs " +
                         shape_of(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return emplace(a.value() + b.value(), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    t.grd(ia) += g;
    t.grd(ib) += g;
  });
}

DiffValue Tape::sub(DiffValue a, DiffValue b) {
  check_owned(a, "sub");
  check_owned(b, "sub");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("sub: shapes disagree: " + shape_of(a.value()) + " vs " +
                         shape_of(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return emplace(a.value() - b.value(), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    t.grd(ia) += g;
    t.grd(ib) -= g;
  });
}

DiffValue Tape::mul(DiffValue a, DiffValue b) {
  check_owned(a, "mul");
  check_owned(b, "mul");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mul: shapes disagree: " + shape_of(a.value()) + " vs " +
                         shape_of(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return emplace(a.value().cwiseProduct(b.value()), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    t.grd(ia) += g.cwiseProduct(t.val(ib));
    t.grd(ib) += g.cwiseProduct(t.val(ia));
  });
}

DiffValue Tape::scale(DiffValue x, double factor) {
  check_owned(x, "scale");
  const std::size_t ix = x.id();
  return emplace(x.value() * factor, [ix, factor](Tape& t, std::size_t self) {
    t.grd(ix) += t.nodes_[self].grad * factor;
  });
}

DiffValue Tape::one_minus(DiffValue x) {
  check_owned(x, "one_minus");
  const std::size_t ix = x.id();
  return emplace((1.0 - x.value().array()).matrix(), [ix](Tape& t, std::size_t self) {
    t.grd(ix) -= t.nodes_[self].grad;
  });
}

DiffValue Tape::add_row(DiffValue x, DiffValue bias) {
  check_owned(x, "add_row");
  check_owned(bias, "add_row");
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_row: bias " + shape_of(bias.value()) +
                         " not broadcastable over " + shape_of(x.value()));
  }
  const std::size_t ix = x.id(), ib = bias.id();
  Mat v = x.value();
  v.rowwise() += bias.value().row(0);
  return emplace(std::move(v), [ix, ib](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    t.grd(ix) += g;
    t.grd(ib) += g.colwise().sum();
  });
}

DiffValue Tape::affine(DiffValue x, DiffValue w, DiffValue b) {
  return add_row(matmul(x, w), b);
}

DiffValue Tape::sigmoid(DiffValue x) {
  check_owned(x, "sigmoid");
  require_finite(x.value(), "sigmoid");
  const std::size_t ix = x.id();
  Mat v = x.value().unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  return emplace(std::move(v), [ix](Tape& t, std::size_t self) {
    const Mat& y = t.val(self);
    t.grd(ix) += t.nodes_[self].grad.cwiseProduct(
        y.cwiseProduct((1.0 - y.array()).matrix()));
  });
}

DiffValue Tape::tanh(DiffValue x) {
  check_owned(x, "tanh");
  require_finite(x.value(), "tanh");
  const std::size_t ix = x.id();
  Mat v = x.value().array().tanh().matrix();
  return emplace(std::move(v), [ix](Tape& t, std::size_t self) {
    const Mat& y = t.val(self);
    t.grd(ix) += t.nodes_[self].grad.cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

DiffValue Tape::softmax_rows(DiffValue x) {
  check_owned(x, "softmax");
  require_finite(x.value(), "softmax");
  const std::size_t ix = x.id();
  Mat v = x.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  return emplace(std::move(v), [ix](Tape& t, std::size_t self) {
    const Mat& y = t.val(self);
    const Mat& g = t.nodes_[self].grad;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).cwiseProduct(y.row(r)).sum();
      t.grd(ix).row(r) += y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
    }
  });
}

DiffValue Tape::row(DiffValue x, Eigen::Index i) {
  check_owned(x, "row");
  if (i < 0 || i >= x.rows()) {
    throw DimensionError("row: index out of range");
  }
  const std::size_t ix = x.id();
  return emplace(x.value().row(i), [ix, i](Tape& t, std::size_t self) {
    t.grd(ix).row(i) += t.nodes_[self].grad.row(0);
  });
}

DiffValue Tape::select_cols(DiffValue x, std::vector<Eigen::Index> cols) {
  check_owned(x, "select_cols");
  for (Eigen::Index c : cols) {
    if (c < 0 || c >= x.cols()) throw DimensionError("select_cols: index out of range");
  }
  const std::size_t ix = x.id();
  Mat v(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) v.col(k) = x.value().col(cols[k]);
  return emplace(std::move(v), [ix, cols = std::move(cols)](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      t.grd(ix).col(cols[k]) += g.col(static_cast<Eigen::Index>(k));
    }
  });
}

DiffValue Tape::concat_rows(std::span<const DiffValue> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (const DiffValue& p : parts) {
    check_owned(p, "concat_rows");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column widths disagree: " +
                           shape_of(parts[0].value()) + " vs " + shape_of(p.value()));
    }
    rows += p.rows();
    ids.push_back(p.id());
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (const DiffValue& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return emplace(std::move(v), [ids = std::move(ids)](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    Eigen::Index at = 0;
    for (std::size_t id : ids) {
      const Eigen::Index r = t.val(id).rows();
      t.grd(id) += g.middleRows(at, r);
      at += r;
    }
  });
}

DiffValue Tape::concat_cols(DiffValue a, DiffValue b) {
  check_owned(a, "concat_cols");
  check_owned(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts disagree: " + shape_of(a.value()) +
                         " vs " + shape_of(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  Mat v(a.rows(), a.cols() + b.cols());
  v.leftCols(a.cols()) = a.value();
  v.rightCols(b.cols()) = b.value();
  return emplace(std::move(v), [ia, ib](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    const Eigen::Index ca = t.val(ia).cols();
    t.grd(ia) += g.leftCols(ca);
    t.grd(ib) += g.rightCols(g.cols() - ca);
  });
}

DiffValue Tape::mean_rows(DiffValue x) {
  check_owned(x, "mean_rows");
  const std::size_t ix = x.id();
  const double inv = 1.0 / static_cast<double>(x.rows());
  Mat v = x.value().colwise().sum() * inv;
  return emplace(std::move(v), [ix, inv](Tape& t, std::size_t self) {
    const Mat& g = t.nodes_[self].grad;
    t.grd(ix).rowwise() += (g.row(0) * inv).eval();
  });
}

DiffValue Tape::normalize_rows(DiffValue x) {
  check_owned(x, "normalize_rows");
  const std::size_t ix = x.id();
  Mat v = x.value();
  std::vector<double> norms(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double n = v.row(r).norm();
    if (n == 0.0) throw DegenerateVectorError("normalize_rows: zero-norm row");
    norms[static_cast<std::size_t>(r)] = n;
    v.row(r) /= n;
  }
  return emplace(std::move(v), [ix, norms = std::move(norms)](Tape& t, std::size_t self) {
    const Mat& y = t.val(self);
    const Mat& g = t.nodes_[self].grad;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).cwiseProduct(y.row(r)).sum();
      t.grd(ix).row(r) +=
          (g.row(r) - dot * y.row(r)) / norms[static_cast<std::size_t>(r)];
    }
  });
}

DiffValue Tape::sum(DiffValue x) {
  check_owned(x, "sum");
  const std::size_t ix = x.id();
  Mat v(1, 1);
  v(0, 0) = x.value().sum();
  return emplace(std::move(v), [ix](Tape& t, std::size_t self) {
    t.grd(ix).array() += t.nodes_[self].grad(0, 0);
  });
}

DiffValue Tape::cross_entropy(DiffValue logits, const std::vector<int>& targets) {
  check_owned(logits, "cross_entropy");
  require_finite(logits.value(), "cross_entropy");
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(logits.rows()) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || t >= logits.cols()) {
      throw DataError("cross_entropy: target " + std::to_string(t) +
                      " out of range [0, " + std::to_string(logits.cols()) + ")");
    }
  }
  const std::size_t ix = logits.id();
  const Mat& l = logits.value();
  double total = 0.0;
  for (Eigen::Index r = 0; r < l.rows(); ++r) {
    const double m = l.row(r).maxCoeff();
    const double lse = m + std::log((l.row(r).array() - m).exp().sum());
    total += lse - l(r, targets[static_cast<std::size_t>(r)]);
  }
  Mat v(1, 1);
  v(0, 0) = total;
  return emplace(std::move(v), [ix, targets](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad(0, 0);
    const Mat& l = t.val(ix);
    for (Eigen::Index r = 0; r < l.rows(); ++r) {
      const double m = l.row(r).maxCoeff();
      Eigen::RowVectorXd p = (l.row(r).array() - m).exp();
      p /= p.sum();
      p(targets[static_cast<std::size_t>(r)]) -= 1.0;
      t.grd(ix).row(r) += g * p;
    }
  });
}

DiffValue Tape::cosine_sim(DiffValue x, DiffValue y) {
  check_owned(x, "cosine_sim");
  check_owned(y, "cosine_sim");
  if (x.rows() != 1 || y.rows() != 1 || x.cols() != y.cols()) {
    throw DimensionError("cosine_sim: expected equal-length row vectors, got " +
                         shape_of(x.value()) + " and " + shape_of(y.value()));
  }
  return matmul(normalize_rows(x), transpose(normalize_rows(y)));
}

void Tape::backward(DiffValue root) {
  check_owned(root, "backward");
  if (root.rows() != 1 || root.cols() != 1) {
    throw DimensionError("backward: root must be a 1x1 scalar, got " +
                         shape_of(root.value()));
  }
  if (!std::isfinite(root.value()(0, 0))) {
    throw NumericError("backward: non-finite loss");
  }
  nodes_[root.id()].grad(0, 0) = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this, i);
  }
}

double grad_check(const GradCheckFn& build, const std::vector<Mat*>& params,
                  double step) {
  std::vector<Mat> analytic;
  {
    Tape tape;
    GradCheckBuild b = build(tape);
    if (b.params.size() != params.size()) {
      throw Error("grad_check: builder bound a different parameter count");
    }
    tape.backward(b.root);
    analytic.reserve(b.params.size());
    for (const DiffValue& p : b.params) analytic.push_back(p.grad());
  }

  auto eval = [&]() {
    Tape tape;
    const double v = build(tape).root.value()(0, 0);
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
    return v;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Mat& p = *params[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p(i);
      p(i) = saved + step;
      const double up = eval();
      p(i) = saved - step;
      const double down = eval();
      p(i) = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k](i);
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

}  // namespace skelssl
