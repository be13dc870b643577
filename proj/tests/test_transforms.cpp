#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "skelssl/transforms.hpp"
#include "test_helpers.hpp"

using namespace skelssl;
using testutil::random_mat;

namespace {

Mat counting_frames(int frames, int joints) {
  Mat m(frames, 3 * joints);
  for (int t = 0; t < frames; ++t) m.row(t).setConstant(t + 1);  // 1-based frame tag
  return m;
}

}  // namespace

TEST_CASE("mask_and_noise splits 200 frames into 50 + 150") {
  std::mt19937_64 rng(1);
  Mat frames = random_mat(200, 6, rng);
  MaskedSample ms = mask_and_noise(frames, 50, 0.02, std::uint64_t{7});
  CHECK(ms.noisy_prefix.rows() == 50);
  CHECK(ms.target_suffix.rows() == 150);
  CHECK(ms.target_suffix == frames.bottomRows(150));
}

TEST_CASE("zero noise leaves the prefix untouched") {
  std::mt19937_64 rng(2);
  Mat frames = random_mat(12, 6, rng);
  MaskedSample ms = mask_and_noise(frames, 5, 0.0, std::uint64_t{7});
  CHECK(ms.noisy_prefix == frames.topRows(5));
  // concatenating prefix + suffix reproduces the original
  Mat recon(12, 6);
  recon.topRows(5) = ms.noisy_prefix;
  recon.bottomRows(7) = ms.target_suffix;
  CHECK(recon == frames);
}

TEST_CASE("masking noise is deterministic per seed") {
  std::mt19937_64 rng(3);
  Mat frames = random_mat(10, 3, rng);
  MaskedSample a = mask_and_noise(frames, 4, 0.1, std::uint64_t{42});
  MaskedSample b = mask_and_noise(frames, 4, 0.1, std::uint64_t{42});
  CHECK(a.noisy_prefix == b.noisy_prefix);
  MaskedSample c = mask_and_noise(frames, 4, 0.1, std::uint64_t{43});
  CHECK(a.noisy_prefix != c.noisy_prefix);
}

TEST_CASE("mask_and_noise validates the prefix length") {
  std::mt19937_64 rng(4);
  Mat frames = random_mat(10, 3, rng);
  CHECK_THROWS_AS(mask_and_noise(frames, 0, 0.1, std::uint64_t{1}), DataError);
  CHECK_THROWS_AS(mask_and_noise(frames, 10, 0.1, std::uint64_t{1}), DataError);
}

TEST_CASE("permutation enumeration is lexicographic with the identity first") {
  const auto p3 = enumerate_permutations(3);
  REQUIRE(p3.size() == 6);
  CHECK(p3[0] == std::vector<int>{0, 1, 2});
  CHECK(p3[1] == std::vector<int>{0, 2, 1});
  CHECK(p3[2] == std::vector<int>{1, 0, 2});

  CHECK(enumerate_permutations(1).size() == 1);
  for (int p = 1; p <= 4; ++p) {
    const auto perms = enumerate_permutations(p);
    CHECK(static_cast<int>(perms.size()) == factorial(p));
    std::vector<int> identity(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) identity[static_cast<std::size_t>(i)] = i;
    CHECK(perms[0] == identity);
  }
  CHECK_THROWS_AS(enumerate_permutations(0), ConfigError);
  CHECK_THROWS_AS(enumerate_permutations(7), ConfigError);
}

TEST_CASE("segment lengths sum to T with the first segments longer") {
  for (int t : {6, 7, 8, 200}) {
    for (int p : {1, 2, 3, 5}) {
      if (t < p) continue;
      const auto lengths = segment_lengths(t, p);
      int total = 0;
      for (std::size_t i = 0; i + 1 < lengths.size(); ++i) {
        CHECK(lengths[i] >= lengths[i + 1]);
        CHECK(lengths[i] - lengths[i + 1] <= 1);
      }
      for (int len : lengths) total += len;
      CHECK(total == t);
    }
  }
}

TEST_CASE("temporal jigsaw applies the drawn segment order") {
  // Force the permutation [2, 0, 1] by scanning seeds; T=6, P=3 segments are
  // (1,2) (3,4) (5,6), so the reorder must produce 5,6,1,2,3,4.
  Mat frames = counting_frames(6, 1);
  const auto perms = enumerate_permutations(3);
  int target_id = -1;
  for (int i = 0; i < 6; ++i) {
    if (perms[static_cast<std::size_t>(i)] == std::vector<int>{2, 0, 1}) target_id = i;
  }
  REQUIRE(target_id >= 0);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
    JigsawSample js = temporal_jigsaw(frames, 3, seed);
    if (js.permutation_id != target_id) continue;
    found = true;
    const double expected[] = {5, 6, 1, 2, 3, 4};
    for (int t = 0; t < 6; ++t) CHECK(js.shuffled(t, 0) == expected[t]);
  }
  CHECK(found);
}

TEST_CASE("identity permutation leaves the sequence unchanged") {
  Mat frames = counting_frames(9, 2);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
    JigsawSample js = temporal_jigsaw(frames, 3, seed);
    if (js.permutation_id != 0) continue;
    found = true;
    CHECK(js.shuffled == frames);
  }
  CHECK(found);
}

TEST_CASE("inverse permutation recovers the original in 100 random cases") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int t = 5 + static_cast<int>(rng() % 20);
    const int p = 2 + static_cast<int>(rng() % 3);
    Mat frames = random_mat(t, 6, rng);
    JigsawSample js = temporal_jigsaw(frames, p, rng);
    CHECK(undo_temporal_jigsaw(js) == frames);
  }
}

TEST_CASE("ten times P-factorial draws cover every permutation id") {
  std::mt19937_64 rng(123);
  for (int p = 2; p <= 5; ++p) {
    Mat frames = counting_frames(3 * p + 1, 1);
    std::set<int> seen;
    for (int draw = 0; draw < 10 * factorial(p); ++draw) {
      seen.insert(temporal_jigsaw(frames, p, rng).permutation_id);
    }
    CHECK(static_cast<int>(seen.size()) == factorial(p));
  }
}

TEST_CASE("spatial jigsaw permutes body part columns") {
  // 10 joints in parts of two; swapping the first two parts maps the joint
  // order to 3,4,1,2,5..10 (1-based).
  Mat frames(2, 30);
  for (int j = 0; j < 10; ++j) {
    frames.middleCols(3 * j, 3).setConstant(j + 1);
  }
  const std::vector<std::vector<int>> parts = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}};
  const auto perms = enumerate_permutations(5);
  int swap_id = -1;
  for (std::size_t i = 0; i < perms.size(); ++i) {
    if (perms[i] == std::vector<int>{1, 0, 2, 3, 4}) swap_id = static_cast<int>(i);
  }
  REQUIRE(swap_id >= 0);
  bool found = false;
  for (std::uint64_t seed = 0; seed < 4096 && !found; ++seed) {
    SpatialJigsawSample sj = spatial_jigsaw(frames, parts, seed);
    if (sj.permutation_id != swap_id) continue;
    found = true;
    const double expected[] = {3, 4, 1, 2, 5, 6, 7, 8, 9, 10};
    for (int slot = 0; slot < 10; ++slot) {
      CHECK(sj.shuffled(0, 3 * slot) == expected[slot]);
    }
  }
  CHECK(found);

  // identity permutation leaves the joints in place
  found = false;
  for (std::uint64_t seed = 0; seed < 4096 && !found; ++seed) {
    SpatialJigsawSample sj = spatial_jigsaw(frames, parts, seed);
    if (sj.permutation_id != 0) continue;
    found = true;
    CHECK(sj.shuffled == frames);
  }
  CHECK(found);
}

TEST_CASE("spatial jigsaw rejects partitions that miss or repeat joints") {
  std::mt19937_64 rng(5);
  Mat frames = random_mat(3, 18, rng);  // 6 joints
  CHECK_THROWS_AS(
      spatial_jigsaw(frames, {{0, 1}, {2}, {3}, {4}, {4}}, std::uint64_t{1}),
      ConfigError);  // joint 4 twice, joint 5 missing
  CHECK_THROWS_AS(spatial_jigsaw(frames, {{0, 1}, {2, 3}, {4, 5}}, std::uint64_t{1}),
                  ConfigError);  // not five parts
}

TEST_CASE("spatial mask zeroes the selected joints and keeps the rest") {
  std::mt19937_64 rng(6);
  Mat frames = random_mat(7, 24, rng);  // 8 joints
  frames.array() += 2.0;                // keep all coordinates away from zero
  SpatialMaskedSample sm = spatial_mask(frames, 0.25, std::uint64_t{11});
  CHECK(sm.masked_joints.size() == 2);  // round(0.25 * 8)
  for (std::size_t k = 0; k < sm.masked_joints.size(); ++k) {
    const int j = sm.masked_joints[k];
    CHECK(sm.corrupted.middleCols(3 * j, 3).isZero(0.0));
    CHECK(sm.target.middleCols(3 * static_cast<int>(k), 3) ==
          frames.middleCols(3 * j, 3));
  }
  for (int j = 0; j < 8; ++j) {
    if (std::count(sm.masked_joints.begin(), sm.masked_joints.end(), j)) continue;
    CHECK(sm.corrupted.middleCols(3 * j, 3) == frames.middleCols(3 * j, 3));
  }
}

TEST_CASE("transform groups hold M members of T frames each") {
  std::mt19937_64 rng(8);
  Mat frames = random_mat(12, 9, rng);
  TransformParams params;
  params.t_prime = 3;
  params.noise_std = 0.05;
  params.segments = 3;
  std::mt19937_64 stream(19);
  TransformGroup group = build_transform_group(
      frames, {TransformOp::kTemporalMask, TransformOp::kTemporalJigsaw}, params,
      stream);
  CHECK(group.transformed.size() == 2);  // M = 3 counting the original
  for (const Mat& member : group.transformed) {
    CHECK(member.rows() == frames.rows());
    CHECK(member.cols() == frames.cols());
  }
  // the masked member is zero-padded over the masked frames
  CHECK(group.transformed[0].bottomRows(9).isZero(0.0));

  std::mt19937_64 empty_stream(19);
  CHECK_THROWS_AS(build_transform_group(frames, {}, params, empty_stream), ConfigError);
}

TEST_CASE("transforms are deterministic under a fixed seed") {
  std::mt19937_64 rng(10);
  Mat frames = random_mat(15, 6, rng);
  TransformParams params;
  params.t_prime = 5;
  params.noise_std = 0.1;
  params.segments = 3;
  std::mt19937_64 s1(55), s2(55);
  TransformGroup a = build_transform_group(
      frames, {TransformOp::kTemporalMask, TransformOp::kTemporalJigsaw}, params, s1);
  TransformGroup b = build_transform_group(
      frames, {TransformOp::kTemporalMask, TransformOp::kTemporalJigsaw}, params, s2);
  for (std::size_t i = 0; i < a.transformed.size(); ++i) {
    CHECK(a.transformed[i] == b.transformed[i]);
  }
}
