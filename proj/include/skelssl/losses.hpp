#pragma once

#include <vector>

#include "skelssl/autodiff.hpp"

namespace skelssl {

// Per-batch loss values as logged in training reports. The self-supervised
// total is always the exact sum of its three parts.
struct LossBundle {
  double motion = 0.0;
  double jigsaw = 0.0;
  double contrastive = 0.0;
  double classification = 0.0;

  double self_total() const { return motion + jigsaw + contrastive; }
};

// Batch-summed squared error over predicted future frames: sum over samples,
// frames and coordinates, no averaging.
DiffValue motion_loss(Tape& tape, const std::vector<DiffValue>& predicted,
                      const std::vector<Mat>& truth);
double motion_loss_value(const std::vector<Mat>& predicted,
                         const std::vector<Mat>& truth);

// Batch-summed cross-entropy of permutation logits against permutation ids.
DiffValue jigsaw_loss(Tape& tape, DiffValue logits, const std::vector<int>& targets);
double jigsaw_loss_value(const Mat& logits, const std::vector<int>& targets);

// Group-mean contrastive loss. `features` holds N groups of M row vectors,
// group-major: z_{gM}, .., z_{gM+M-1} belong to group g (the first member is
// the untransformed view). For every feature the positive is its own group
// mean and the partition function runs over all N group means:
//   loss = -sum_i log( exp(sim(z_i, mean_k)) / sum_j exp(sim(z_i, mean_j)) )
DiffValue contrastive_loss(Tape& tape, const std::vector<DiffValue>& features,
                           int group_size);
double contrastive_loss_value(const Mat& features, int group_size);

// Action cross-entropy; same kernel as the jigsaw loss, different targets.
DiffValue classification_loss(Tape& tape, DiffValue logits,
                              const std::vector<int>& labels);
double classification_loss_value(const Mat& logits, const std::vector<int>& labels);

// theta·L_cls + (1−theta)·L_self with theta in [0, 1].
DiffValue combine_moving(Tape& tape, DiffValue l_cls, DiffValue l_self, double theta);
double combine_moving(double l_cls, double l_self, double theta);

// L_cls + omega·L_self with omega >= 0.
DiffValue combine_joint(Tape& tape, DiffValue l_cls, DiffValue l_self, double omega);
double combine_joint(double l_cls, double l_self, double omega);

}  // namespace skelssl
