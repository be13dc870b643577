#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skelssl/losses.hpp"
#include "skelssl/model.hpp"
#include "skelssl/skeleton.hpp"
#include "skelssl/transforms.hpp"

namespace skelssl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard bias-corrected Adam over a fixed parameter list. Moments are
// allocated on the first step and stay aligned with that list.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update. `grads` must be aligned with `params`; a non-finite
  // gradient aborts with a diagnostic naming the parameter.
  void step(const std::vector<std::pair<std::string, Mat*>>& params,
            const std::vector<Mat>& grads, double lr);

  long steps() const { return steps_; }

 private:
  AdamConfig config_;
  long steps_ = 0;
  std::vector<Mat> m_, v_;
};

// Step-decayed learning rate plus the blend weights of the two supervised
// training strategies.
struct Schedule {
  double base_lr = 0.01;
  double floor_lr = 0.0001;
  double decay = 0.1;
  int decay_every = 100;  // iterations
  int moving_epochs = 10;
  double omega = 1.0;

  double lr(long iteration) const;
  // Linear ramp over 1-based epochs: theta(0) = 0 at the ramp start and
  // theta(e) = 1 for every epoch >= moving_epochs. A zero-length ramp jumps
  // straight to 1 (plain finetuning).
  double theta(int epoch) const;
};

struct EpochRow {
  int epoch = 0;  // 1-based
  double l_m = 0.0, l_j = 0.0, l_c = 0.0, l_self = 0.0, l_cls = 0.0;
  double theta = 0.0, lr = 0.0;
  double train_acc = 0.0, test_acc = 0.0;
  double wall_seconds = 0.0;  // in-memory only, not serialized
};

struct TrainReport {
  std::vector<EpochRow> rows;

  static constexpr const char* kCsvHeader =
      "epoch,L_m,L_j,L_c,L_self,L_cls,theta,lr,train_acc,test_acc";

  // Appends the other report's rows with epochs renumbered to continue.
  void append(const TrainReport& other);
  void write_csv(const std::string& path) const;
  std::string to_csv() const;
};

struct TaskVariant {
  enum Kind { kTemporal, kSpatial };
};

// Which pretext tasks are active and in which variant.
struct TaskConfig {
  bool prediction = true;
  bool jigsaw = true;
  bool contrastive = true;
  TaskVariant::Kind prediction_variant = TaskVariant::kTemporal;
  TaskVariant::Kind jigsaw_variant = TaskVariant::kTemporal;
  std::vector<TransformOp> contrastive_ops = {TransformOp::kTemporalMask,
                                              TransformOp::kTemporalJigsaw};

  bool any() const { return prediction || jigsaw || contrastive; }
};

struct TrainConfig {
  ModelConfig model;          // joints/num_classes are overwritten from the data
  TransformParams transform;  // T', noise, segments, mask fraction, body parts
  TaskConfig tasks;
  Schedule schedule;
  int epochs = 30;
  int pretrain_epochs = 30;
  int batch_size = 32;
  int probe_epochs = 50;
};

enum class Strategy { kRand, kPretrain, kMoving, kJointly, kFinetune };

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

// Self-supervised pretraining on L_self over the active task subset; labels
// are ignored.
std::pair<ModelParams, TrainReport> pretrain_self_supervised(
    const Dataset& data, const TrainConfig& config, std::uint64_t seed);

// Supervised training under one of the strategies:
//   rand     — random init, L_cls only
//   pretrain — pretrained init, encoder frozen, L_cls only
//   moving   — pretrained init, theta·L_cls + (1−theta)·L_self with the ramp
//   jointly  — L_cls + omega·L_self (random init unless one is supplied)
//   finetune — pretrained init, all parameters, L_cls only
// `init` is required for pretrain, moving and finetune. When `test` is given
// the report carries per-epoch test accuracy.
std::pair<ModelParams, TrainReport> train_supervised(
    const Dataset& train, Strategy strategy, const ModelParams* init,
    const TrainConfig& config, std::uint64_t seed, const Dataset* test = nullptr);

// Pretrains on labeled ∪ unlabeled (labels ignored), then finetunes the whole
// network on the labeled split with L_cls. The report concatenates both
// phases.
std::pair<ModelParams, TrainReport> train_semi_supervised(
    const Dataset& labeled, const Dataset& unlabeled, const TrainConfig& config,
    std::uint64_t seed, const Dataset* test = nullptr);

// Pretrains on the source dataset, then finetunes everything on the target.
// Joint counts must match; the classifier is sized for the target classes.
std::pair<ModelParams, TrainReport> transfer_learning(
    const Dataset& source, const Dataset& target, const TrainConfig& config,
    std::uint64_t seed, const Dataset* test = nullptr);

// Derived seed for the finetune phase of the two-phase recipes above.
std::uint64_t finetune_seed(std::uint64_t seed);

// Fills joints/num_classes (and the jigsaw label space) from the dataset.
ModelConfig resolve_model_config(const TrainConfig& config, const Dataset& data);

}  // namespace skelssl
