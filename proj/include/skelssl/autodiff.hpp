#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "skelssl/errors.hpp"

namespace skelssl {

using Mat = Eigen::MatrixXd;

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
class DiffValue {
 public:
  DiffValue() = default;

  const Mat& value() const;
  // After Tape::backward from a scalar root, holds d(root)/d(this node).
  const Mat& grad() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  DiffValue(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Record of one forward computation. Operations append nodes in evaluation
// order; backward() replays them in exact reverse, accumulating gradients
// (sum) into every parent, so a node feeding several consumers receives the
// total of all downstream contributions. One tape per training step; not
// shared across threads.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Inputs. `leaf` is for parameters and anything we want gradients for;
  // `constant` is the same node flavor, named for intent (data, targets).
  DiffValue leaf(Mat value);
  DiffValue constant(Mat value) { return leaf(std::move(value)); }

  DiffValue matmul(DiffValue a, DiffValue b);
  DiffValue transpose(DiffValue x);
  DiffValue add(DiffValue a, DiffValue b);
  DiffValue sub(DiffValue a, DiffValue b);
  DiffValue mul(DiffValue a, DiffValue b);  // elementwise
  DiffValue scale(DiffValue x, double factor);
  DiffValue one_minus(DiffValue x);

  // x (R×C) + bias (1×C) broadcast over rows.
  DiffValue add_row(DiffValue x, DiffValue bias);
  // value = x·W + b with b broadcast over the rows of xW.
  DiffValue affine(DiffValue x, DiffValue w, DiffValue b);

  DiffValue sigmoid(DiffValue x);
  DiffValue tanh(DiffValue x);
  // Row softmax, computed with max subtraction. Rows sum to 1.
  DiffValue softmax_rows(DiffValue x);

  DiffValue row(DiffValue x, Eigen::Index i);
  DiffValue select_cols(DiffValue x, std::vector<Eigen::Index> cols);
  DiffValue concat_rows(std::span<const DiffValue> parts);
  DiffValue concat_cols(DiffValue a, DiffValue b);
  DiffValue mean_rows(DiffValue x);       // 1×C
  DiffValue normalize_rows(DiffValue x);  // each row divided by its 2-norm
  DiffValue sum(DiffValue x);             // 1×1

  // Batch-summed cross-entropy: sum over rows of -log softmax(row)[target].
  DiffValue cross_entropy(DiffValue logits, const std::vector<int>& targets);

  // Cosine similarity of two nonzero row vectors; value in [-1, 1].
  DiffValue cosine_sim(DiffValue x, DiffValue y);

  // Seeds the scalar root with gradient 1 and sweeps the record once, in
  // reverse order of recording.
  void backward(DiffValue root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    // Reads this node's grad and accumulates into the parents. Empty for
    // leaves.
    std::function<void(Tape&, std::size_t)> backprop;
  };

  friend class DiffValue;

  DiffValue emplace(Mat value, std::function<void(Tape&, std::size_t)> backprop);
  const Mat& val(std::size_t id) const { return nodes_[id].value; }
  Mat& grd(std::size_t id) { return nodes_[id].grad; }
  void check_owned(DiffValue v, const char* op) const;

  std::vector<Node> nodes_;
};

// Max relative gradient error between the tape and central finite
// differences, taken over every element of `params`. `build` must bind the
// current contents of `params` as tape leaves and return the scalar loss
// root together with the leaf handles, aligned with `params`.
struct GradCheckBuild {
  DiffValue root;
  std::vector<DiffValue> params;
};
using GradCheckFn = std::function<GradCheckBuild(Tape&)>;

double grad_check(const GradCheckFn& build, const std::vector<Mat*>& params,
                  double step = 1e-5);

}  // namespace skelssl
