#include "skelssl/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skelssl/rng.hpp"

namespace skelssl {

MaskedSample mask_and_noise(const Mat& frames, int t_prime, double noise_std,
                            std::mt19937_64& rng) {
  const int t = static_cast<int>(frames.rows());
  if (t_prime < 1 || t_prime >= t) {
    throw DataError("mask_and_noise: T' = " + std::to_string(t_prime) +
                    " outside [1, " + std::to_string(t) + ")");
  }
  if (noise_std < 0.0) throw ConfigError("mask_and_noise: negative noise_std");
  MaskedSample out;
  out.t_prime = t_prime;
  out.noisy_prefix = frames.topRows(t_prime);
  out.target_suffix = frames.bottomRows(t - t_prime);
  if (noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    for (Eigen::Index i = 0; i < out.noisy_prefix.size(); ++i) {
      out.noisy_prefix(i) += noise(rng);
    }
  }
  return out;
}

MaskedSample mask_and_noise(const Mat& frames, int t_prime, double noise_std,
                            std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  return mask_and_noise(frames, t_prime, noise_std, rng);
}

int factorial(int p) {
  int f = 1;
  for (int i = 2; i <= p; ++i) f *= i;
  return f;
}

std::vector<std::vector<int>> enumerate_permutations(int p) {
  if (p < 1 || p > 6) {
    throw ConfigError("enumerate_permutations: P = " + std::to_string(p) +
                      " outside [1, 6]");
  }
  std::vector<int> perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(factorial(p)));
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<int> segment_lengths(int frames, int segments) {
  if (segments < 1) throw ConfigError("segment_lengths: P must be >= 1");
  if (frames < segments) {
    throw DataError("segment_lengths: " + std::to_string(frames) +
                    " frames cannot be cut into " + std::to_string(segments) +
                    " segments");
  }
  const int base = frames / segments;
  const int longer = frames % segments;
  std::vector<int> lengths(static_cast<std::size_t>(segments), base);
  for (int i = 0; i < longer; ++i) ++lengths[static_cast<std::size_t>(i)];
  return lengths;
}

namespace {

Mat apply_segment_permutation(const Mat& frames, const std::vector<int>& lengths,
                              const std::vector<int>& perm) {
  std::vector<int> starts(lengths.size());
  int at = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    starts[i] = at;
    at += lengths[i];
  }
  Mat out(frames.rows(), frames.cols());
  int row = 0;
  for (int src : perm) {
    const std::size_t s = static_cast<std::size_t>(src);
    out.middleRows(row, lengths[s]) = frames.middleRows(starts[s], lengths[s]);
    row += lengths[s];
  }
  return out;
}

std::vector<int> invert_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  }
  return inv;
}

}  // namespace

JigsawSample temporal_jigsaw(const Mat& frames, int segments, std::mt19937_64& rng) {
  const auto perms = enumerate_permutations(segments);
  const auto lengths = segment_lengths(static_cast<int>(frames.rows()), segments);
  std::uniform_int_distribution<std::size_t> pick(0, perms.size() - 1);
  const std::size_t id = pick(rng);
  JigsawSample out;
  out.segments = segments;
  out.permutation_id = static_cast<int>(id);
  out.shuffled = apply_segment_permutation(frames, lengths, perms[id]);
  return out;
}

JigsawSample temporal_jigsaw(const Mat& frames, int segments, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  return temporal_jigsaw(frames, segments, rng);
}

Mat undo_temporal_jigsaw(const JigsawSample& sample) {
  const auto perms = enumerate_permutations(sample.segments);
  const std::vector<int>& perm = perms.at(static_cast<std::size_t>(sample.permutation_id));
  const auto lengths = segment_lengths(static_cast<int>(sample.shuffled.rows()),
                                       sample.segments);
  // The shuffled sequence's k-th block has the length of source segment
  // perm[k]; scattering those blocks back by the inverse restores the original.
  std::vector<int> shuffled_lengths(lengths.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    shuffled_lengths[k] = lengths[static_cast<std::size_t>(perm[k])];
  }
  return apply_segment_permutation(sample.shuffled, shuffled_lengths,
                                   invert_permutation(perm));
}

namespace {

void validate_body_parts(const std::vector<std::vector<int>>& parts, int joints) {
  if (parts.size() != 5) {
    throw ConfigError("spatial_jigsaw: expected 5 body parts, got " +
                      std::to_string(parts.size()));
  }
  std::vector<int> cover(static_cast<std::size_t>(joints), 0);
  for (const auto& part : parts) {
    if (part.empty()) throw ConfigError("spatial_jigsaw: empty body part");
    for (int j : part) {
      if (j < 0 || j >= joints) {
        throw ConfigError("spatial_jigsaw: joint index " + std::to_string(j) +
                          " outside [0, " + std::to_string(joints) + ")");
      }
      ++cover[static_cast<std::size_t>(j)];
    }
  }
  for (int j = 0; j < joints; ++j) {
    if (cover[static_cast<std::size_t>(j)] != 1) {
      throw ConfigError("spatial_jigsaw: joint " + std::to_string(j) +
                        " covered " + std::to_string(cover[static_cast<std::size_t>(j)]) +
                        " times; the partition must cover every joint exactly once");
    }
  }
}

}  // namespace

SpatialJigsawSample spatial_jigsaw(const Mat& frames,
                                   const std::vector<std::vector<int>>& body_parts,
                                   std::mt19937_64& rng) {
  const int joints = static_cast<int>(frames.cols()) / 3;
  validate_body_parts(body_parts, joints);
  const auto perms = enumerate_permutations(static_cast<int>(body_parts.size()));
  std::uniform_int_distribution<std::size_t> pick(0, perms.size() - 1);
  const std::size_t id = pick(rng);

  SpatialJigsawSample out;
  out.parts = static_cast<int>(body_parts.size());
  out.permutation_id = static_cast<int>(id);
  out.shuffled = Mat(frames.rows(), frames.cols());
  int slot = 0;
  for (int src : perms[id]) {
    for (int j : body_parts[static_cast<std::size_t>(src)]) {
      out.shuffled.middleCols(3 * slot, 3) = frames.middleCols(3 * j, 3);
      ++slot;
    }
  }
  return out;
}

SpatialJigsawSample spatial_jigsaw(const Mat& frames,
                                   const std::vector<std::vector<int>>& body_parts,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  return spatial_jigsaw(frames, body_parts, rng);
}

SpatialMaskedSample spatial_mask(const Mat& frames, double mask_fraction,
                                 std::mt19937_64& rng) {
  if (!(mask_fraction > 0.0) || !(mask_fraction < 1.0)) {
    throw ConfigError("spatial_mask: fraction must be in (0, 1)");
  }
  const int joints = static_cast<int>(frames.cols()) / 3;
  int count = static_cast<int>(std::lround(mask_fraction * joints));
  count = std::clamp(count, 1, joints - 1);

  std::vector<int> order(static_cast<std::size_t>(joints));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());

  SpatialMaskedSample out;
  out.masked_joints = order;
  out.corrupted = frames;
  out.target = Mat(frames.rows(), 3 * count);
  for (int k = 0; k < count; ++k) {
    const int j = order[static_cast<std::size_t>(k)];
    out.target.middleCols(3 * k, 3) = frames.middleCols(3 * j, 3);
    out.corrupted.middleCols(3 * j, 3).setZero();
  }
  return out;
}

SpatialMaskedSample spatial_mask(const Mat& frames, double mask_fraction,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  return spatial_mask(frames, mask_fraction, rng);
}

TransformGroup build_transform_group(const Mat& frames,
                                     const std::vector<TransformOp>& operators,
                                     const TransformParams& params,
                                     std::mt19937_64& rng) {
  if (operators.empty()) {
    throw ConfigError("build_transform_group: operator list is empty");
  }
  TransformGroup group;
  group.original = frames;
  group.transformed.reserve(operators.size());
  for (TransformOp op : operators) {
    switch (op) {
      case TransformOp::kTemporalMask: {
        MaskedSample m = mask_and_noise(frames, params.t_prime, params.noise_std, rng);
        Mat padded = Mat::Zero(frames.rows(), frames.cols());
        padded.topRows(m.noisy_prefix.rows()) = m.noisy_prefix;
        group.transformed.push_back(std::move(padded));
        break;
      }
      case TransformOp::kTemporalJigsaw: {
        group.transformed.push_back(
            temporal_jigsaw(frames, params.segments, rng).shuffled);
        break;
      }
      case TransformOp::kSpatialMask: {
        group.transformed.push_back(
            spatial_mask(frames, params.mask_fraction, rng).corrupted);
        break;
      }
      case TransformOp::kSpatialJigsaw: {
        group.transformed.push_back(
            spatial_jigsaw(frames, params.body_parts, rng).shuffled);
        break;
      }
    }
  }
  return group;
}

}  // namespace skelssl
