#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "skelssl/skeleton.hpp"

namespace skelssl {

// Temporal masking: a noisy observed prefix and the clean frames after it.
struct MaskedSample {
  Mat noisy_prefix;   // T' × 3J, prefix plus Gaussian noise
  Mat target_suffix;  // (T − T') × 3J, untouched
  int t_prime = 0;
};

// Temporal jigsaw: the sequence cut into `segments` contiguous pieces and
// reordered; the label is the index of the applied permutation in the
// lexicographic enumeration.
struct JigsawSample {
  Mat shuffled;  // T × 3J
  int permutation_id = 0;
  int segments = 0;
};

// Spatial jigsaw reorders body parts (joint groups) instead of time segments.
struct SpatialJigsawSample {
  Mat shuffled;  // T × 3J, joint columns reordered
  int permutation_id = 0;
  int parts = 0;
};

// Spatial masking zeroes whole joints across all frames.
struct SpatialMaskedSample {
  Mat corrupted;                  // T × 3J with masked joint columns zeroed
  Mat target;                     // T × 3k, original values of the masked joints
  std::vector<int> masked_joints;  // ascending
};

struct TransformGroup {
  Mat original;                  // T × 3J
  std::vector<Mat> transformed;  // M − 1 members, each padded/kept at T rows
  int group_id = 0;
};

enum class TransformOp {
  kTemporalMask,
  kTemporalJigsaw,
  kSpatialMask,
  kSpatialJigsaw,
};

// Per-operator settings shared by the pretext builders.
struct TransformParams {
  int t_prime = 50;
  double noise_std = 0.02;
  int segments = 3;
  double mask_fraction = 0.3;
  std::vector<std::vector<int>> body_parts;  // 5 joint-index groups
};

MaskedSample mask_and_noise(const Mat& frames, int t_prime, double noise_std,
                            std::mt19937_64& rng);
MaskedSample mask_and_noise(const Mat& frames, int t_prime, double noise_std,
                            std::uint64_t seed);

// All P! permutations of {0..P−1} in lexicographic order; index 0 is the
// identity. P is capped at 6 to keep the label space trainable.
std::vector<std::vector<int>> enumerate_permutations(int p);
int factorial(int p);

JigsawSample temporal_jigsaw(const Mat& frames, int segments, std::mt19937_64& rng);
JigsawSample temporal_jigsaw(const Mat& frames, int segments, std::uint64_t seed);

// Undoes the recorded permutation, recovering the original frame order.
Mat undo_temporal_jigsaw(const JigsawSample& sample);

// Segment lengths for a T-frame sequence cut into P pieces: the first
// (T mod P) segments are one frame longer.
std::vector<int> segment_lengths(int frames, int segments);

SpatialJigsawSample spatial_jigsaw(const Mat& frames,
                                   const std::vector<std::vector<int>>& body_parts,
                                   std::mt19937_64& rng);
SpatialJigsawSample spatial_jigsaw(const Mat& frames,
                                   const std::vector<std::vector<int>>& body_parts,
                                   std::uint64_t seed);

SpatialMaskedSample spatial_mask(const Mat& frames, double mask_fraction,
                                 std::mt19937_64& rng);
SpatialMaskedSample spatial_mask(const Mat& frames, double mask_fraction,
                                 std::uint64_t seed);

// Applies each operator independently to `frames`; members derived from
// temporal masking are zero-padded back to T rows so every member has the
// original length.
TransformGroup build_transform_group(const Mat& frames,
                                     const std::vector<TransformOp>& operators,
                                     const TransformParams& params,
                                     std::mt19937_64& rng);

}  // namespace skelssl
