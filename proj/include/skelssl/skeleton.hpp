#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skelssl/autodiff.hpp"

namespace skelssl {

// One skeleton recording: T frames of J joints, each joint an (x, y, z)
// triple. Frames are stored flattened joint-major, one row per frame:
// row t = [x0 y0 z0 x1 y1 z1 ...], so the matrix is T × 3J.
struct SkeletonSequence {
  std::string id;
  int joint_count = 0;
  std::optional<int> label;
  Mat frames;

  int length() const { return static_cast<int>(frames.rows()); }
  double coord(int t, int joint, int axis) const {
    return frames(t, 3 * joint + axis);
  }
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<SkeletonSequence> sequences, int num_classes, int joint_count,
          std::string split_tag = "train");

  // The read counter is diagnostic state, not identity; copies and moves
  // carry it along. (The atomic member deletes the defaults.)
  Dataset(const Dataset& other);
  Dataset(Dataset&& other) noexcept;
  Dataset& operator=(const Dataset& other);
  Dataset& operator=(Dataset&& other) noexcept;

  std::size_t size() const { return sequences_.size(); }
  bool empty() const { return sequences_.empty(); }
  int num_classes() const { return num_classes_; }
  int joint_count() const { return joint_count_; }
  const std::string& split_tag() const { return split_tag_; }

  const SkeletonSequence& sequence(std::size_t i) const;
  const std::vector<SkeletonSequence>& sequences() const { return sequences_; }

  // Number of sequence() reads since construction or the last reset. Lets
  // tests pin down which phases touch which data.
  std::uint64_t read_count() const { return reads_.load(std::memory_order_relaxed); }
  void reset_read_count() const { reads_.store(0, std::memory_order_relaxed); }

 private:
  std::vector<SkeletonSequence> sequences_;
  int num_classes_ = 0;
  int joint_count_ = 0;
  std::string split_tag_ = "train";
  mutable std::atomic<std::uint64_t> reads_{0};
};

struct SplitSpec {
  double labeled_fraction = 0.1;  // in (0, 1]
  std::uint64_t seed = 0;
};

// SKEL1 text format, one dataset per file (ASCII, LF):
//   SKEL1 <num_sequences> <J> <num_classes>
//   SEQ <id> <T> <label|-1>
//   ... T lines of 3J decimals, joint-major ...
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const Dataset& ds);

// Keeps exactly `target_len` frames at indices floor(k*T/L); repeats frames
// when the sequence is shorter than the target.
SkeletonSequence downsample(const SkeletonSequence& seq, int target_len);
Dataset downsample(const Dataset& ds, int target_len);

// Subtracts the sequence centroid (mean over frames and joints, per axis).
SkeletonSequence center_sequence(const SkeletonSequence& seq);
Dataset center_sequences(const Dataset& ds);

struct SyntheticConfig {
  int num_classes = 4;
  int sequences_per_class = 50;
  int frames = 200;  // T
  int joints = 8;    // J
  double noise_std = 0.05;
  std::uint64_t seed = 1;
};

// Deterministic synthetic motions: every class is a fixed set of per-joint
// sinusoidal trajectories (offset, amplitude, frequency, phase drawn from
// the class stream); sequences are the class template plus i.i.d. Gaussian
// observation noise.
Dataset generate_synthetic(const SyntheticConfig& config);

// The class template a synthetic sequence was drawn around (noise-free).
Mat synthetic_template(const SyntheticConfig& config, int action_class);

// Uniform split without replacement; the unlabeled half has labels stripped.
std::pair<Dataset, Dataset> split_labeled(const Dataset& ds, const SplitSpec& spec);

// Per-class holdout: the last `test_per_class` sequences of every class form
// the test split. Keeps class templates shared between the two halves.
std::pair<Dataset, Dataset> holdout_per_class(const Dataset& ds, int test_per_class);

}  // namespace skelssl
