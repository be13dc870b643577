#pragma once

#include <string>
#include <utility>
#include <vector>

#include "skelssl/autodiff.hpp"

namespace skelssl {

// One GRU cell's weights. Inputs are row vectors, so kernels are laid out
// input-major: w_* is (input_dim × hidden), u_* is (hidden × hidden) and
// b_* is (1 × hidden).
struct GRUParams {
  Mat w_update, u_update, b_update;
  Mat w_reset, u_reset, b_reset;
  Mat w_cand, u_cand, b_cand;

  static GRUParams zeros(int input_dim, int hidden);

  int input_dim() const { return static_cast<int>(w_update.rows()); }
  int hidden() const { return static_cast<int>(w_update.cols()); }

  // Stable enumeration used by the optimizer, checkpoints and grad checks.
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Mat*>>& out);
};

// Tape handles for one cell's weights, bound for the current step.
struct GRUVars {
  DiffValue w_update, u_update, b_update;
  DiffValue w_reset, u_reset, b_reset;
  DiffValue w_cand, u_cand, b_cand;
};

GRUVars bind(Tape& tape, const GRUParams& p);

// Standard GRU step for a batch of row-vector states:
//   z = sigmoid(x·Wz + h·Uz + bz)
//   r = sigmoid(x·Wr + h·Ur + br)
//   h~ = tanh(x·Wc + (r ⊙ h)·Uc + bc)      (reset applied to h before Uc)
//   h' = (1 − z) ⊙ h + z ⊙ h~
// The cell equations are not pinned down by the sources this follows, so the
// reset-before-recurrence convention above is the contract.
DiffValue gru_cell(Tape& tape, DiffValue x, DiffValue h_prev, const GRUVars& v);

// Inference-only evaluation of the same cell; must match gru_cell exactly.
Mat gru_cell_values(const Mat& x, const Mat& h_prev, const GRUParams& p);

}  // namespace skelssl
