#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelssl/training.hpp"

namespace skelssl {

// Flat `section.key = value` run configuration. Every field has a default;
// unknown keys are rejected; a seed must be set explicitly before any
// training command runs.
struct RunConfig {
  // data
  std::string data_train;
  std::string data_test;
  int data_downsample = 0;  // 0 = off
  bool data_center = false;

  // synthetic generator
  int synthetic_classes = 4;
  int synthetic_per_class = 50;
  int synthetic_test_per_class = 0;
  int synthetic_frames = 200;
  int synthetic_joints = 8;
  double synthetic_noise_std = 0.05;
  long synthetic_seed = 1;

  // model
  int model_hidden = 30;
  int model_segments = 3;
  int model_t_prime = 50;
  double model_noise_std = 0.02;
  double model_mask_fraction = 0.3;
  std::string model_body_parts;  // "0,1;2,3;4,5;6,7;8,9"

  // tasks
  bool tasks_prediction = true;
  bool tasks_jigsaw = true;
  bool tasks_contrastive = true;
  std::string tasks_prediction_variant = "temporal";
  std::string tasks_jigsaw_variant = "temporal";
  std::string tasks_contrastive_ops = "temporal_mask,temporal_jigsaw";

  // training
  std::string train_strategy = "rand";
  int train_epochs = 30;
  int train_pretrain_epochs = 30;
  int train_moving_epochs = 10;
  double train_omega = 1.0;
  int train_batch = 32;
  int train_probe_epochs = 50;
  double train_fraction = 0.1;
  long train_seed = -1;  // mandatory for training commands
  std::string train_init;
  int train_jobs = 1;

  // sweep
  std::string sweep_subsets = "m,j,c,mj,mc,jc,mjc";

  std::string output_dir = "out";

  bool has_seed() const { return train_seed >= 0; }
};

// Reads a config file; collects every problem instead of stopping at the
// first. Blank lines and '#' comments are ignored.
void load_config_file(const std::string& path, RunConfig& config,
                      std::vector<std::string>& errors);

// Applies one `section.key=value` override.
void apply_override(const std::string& assignment, RunConfig& config,
                    std::vector<std::string>& errors);

// Cross-field validation (ranges, enum values, partitions).
std::vector<std::string> validate(const RunConfig& config);

// Materializes the training configuration from the flat settings.
TrainConfig make_train_config(const RunConfig& config);

SyntheticConfig make_synthetic_config(const RunConfig& config);

// Parses "0,1;2,3;4,5;6,7;8,9" into five joint groups.
std::vector<std::vector<int>> parse_body_parts(const std::string& text);

std::vector<TransformOp> parse_transform_ops(const std::string& text);

}  // namespace skelssl
