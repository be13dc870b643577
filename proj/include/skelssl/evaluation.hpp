#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelssl/model.hpp"
#include "skelssl/skeleton.hpp"
#include "skelssl/training.hpp"

namespace skelssl {

struct ProbeResult {
  double accuracy = 0.0;
  int feature_dim = 0;
  std::string encoder_source;  // "rand", "pretrained" or "file"
};

// Fraction of rows whose argmax equals the label; ties resolve to the lowest
// class index.
double accuracy(const Mat& logits, const std::vector<int>& labels);

// Accuracy of `params` over a labeled dataset under the given classify mode.
double dataset_accuracy(const Dataset& data, const ModelParams& params,
                        ClassifyMode mode);

// Trains only the linear probe head on pooled features of the frozen encoder
// and reports test accuracy. Encoder weights are never touched; the probe
// starts from zero (the problem is convex) and uses the same Adam/schedule as
// the training module.
ProbeResult linear_probe(const ModelParams& encoder, const Dataset& train,
                         const Dataset& test, const TrainConfig& config,
                         std::uint64_t seed, const std::string& encoder_source);

struct AblationCell {
  TaskConfig tasks;
  std::string label;  // e.g. "prediction+jigsaw"
  double accuracy = 0.0;
};

struct AblationGrid {
  std::vector<AblationCell> cells;
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

// For each requested task subset: pretrain with only those losses active,
// then finetune with the jointly objective from the pretrained weights, and
// record test accuracy. Every cell runs under the same seed. Cells are
// independent; `jobs` > 1 runs them on that many threads.
AblationGrid ablation_sweep(const Dataset& train, const Dataset& test,
                            const std::vector<TaskConfig>& combinations,
                            const TrainConfig& config, std::uint64_t seed,
                            int jobs = 1);

// Largest consecutive-epoch increase of L_self at or after the transition row
// (0-based). Negative result means the curve never rises there.
double max_upward_jump(const TrainReport& report, int transition_row);

// Human-readable subset label, "prediction+jigsaw+contrastive" style.
std::string task_label(const TaskConfig& tasks);

// Parses compact subset codes like "mjc" or "prediction+contrastive".
TaskConfig task_subset_from_code(const std::string& code, const TaskConfig& base);

}  // namespace skelssl
