#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "skelssl/evaluation.hpp"
#include "test_helpers.hpp"

using namespace skelssl;
using testutil::random_mat;

namespace {

Dataset constant_class_data(int classes, int per_class, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.num_classes = classes;
  cfg.sequences_per_class = per_class;
  cfg.frames = 10;
  cfg.joints = 2;
  cfg.noise_std = 0.0;  // every sequence equals its class template
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

TrainConfig probe_config() {
  TrainConfig cfg;
  cfg.model.hidden = 4;
  cfg.transform.t_prime = 3;
  cfg.transform.segments = 3;
  cfg.probe_epochs = 40;
  cfg.batch_size = 8;
  cfg.epochs = 2;
  cfg.pretrain_epochs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("accuracy of perfect predictions is one") {
  Mat logits = Mat::Zero(4, 3);
  std::vector<int> labels = {0, 1, 2, 1};
  for (int i = 0; i < 4; ++i) logits(i, labels[static_cast<std::size_t>(i)]) = 5.0;
  CHECK(accuracy(logits, labels) == 1.0);
}

TEST_CASE("uniform random logits score near chance") {
  std::mt19937_64 rng(3);
  const int n = 5000;
  Mat logits = random_mat(n, 10, rng);
  std::vector<int> labels;
  std::uniform_int_distribution<int> dist(0, 9);
  for (int i = 0; i < n; ++i) labels.push_back(dist(rng));
  const double acc = accuracy(logits, labels);
  CHECK(acc > 0.07);
  CHECK(acc < 0.13);
}

TEST_CASE("argmax ties resolve to the lowest class index") {
  Mat logits = Mat::Zero(1, 6);
  logits(0, 2) = 1.0;
  logits(0, 5) = 1.0;  // tie between classes 2 and 5
  CHECK(accuracy(logits, {2}) == 1.0);
  CHECK(accuracy(logits, {5}) == 0.0);
}

TEST_CASE("accuracy is invariant to sample order") {
  std::mt19937_64 rng(5);
  Mat logits = random_mat(40, 4, rng);
  std::vector<int> labels;
  std::uniform_int_distribution<int> dist(0, 3);
  for (int i = 0; i < 40; ++i) labels.push_back(dist(rng));
  const double base = accuracy(logits, labels);

  std::vector<int> order(40);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Mat shuffled(40, 4);
  std::vector<int> shuffled_labels(40);
  for (int i = 0; i < 40; ++i) {
    shuffled.row(i) = logits.row(order[static_cast<std::size_t>(i)]);
    shuffled_labels[static_cast<std::size_t>(i)] =
        labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  CHECK(accuracy(shuffled, shuffled_labels) == base);
}

TEST_CASE("accuracy rejects an empty batch") {
  CHECK_THROWS_AS(accuracy(Mat(0, 3), {}), DataError);
}

TEST_CASE("the linear probe never mutates the encoder") {
  Dataset data = constant_class_data(3, 6, 7);
  TrainConfig cfg = probe_config();
  ModelParams encoder = init_params(resolve_model_config(cfg, data), 9);
  ModelParams before = encoder;
  ProbeResult result = linear_probe(encoder, data, data, cfg, 11, "rand");
  auto be = before.entries();
  auto ae = encoder.entries();
  for (std::size_t i = 0; i < be.size(); ++i) {
    CHECK(*be[i].second == *ae[i].second);
  }
  CHECK(result.feature_dim == 8);
  CHECK(result.encoder_source == "rand");
  CHECK(result.accuracy >= 0.0);
  CHECK(result.accuracy <= 1.0);
}

TEST_CASE("class-constant features probe to full accuracy") {
  // With zero observation noise every sequence of a class is identical, so
  // pooled features are class-constant and the probe must separate them.
  Dataset data = constant_class_data(3, 8, 13);
  TrainConfig cfg = probe_config();
  ModelParams encoder = init_params(resolve_model_config(cfg, data), 15);
  ProbeResult result = linear_probe(encoder, data, data, cfg, 17, "rand");
  CHECK(result.accuracy == 1.0);
}

TEST_CASE("probe accuracy on a random encoder is recorded, not asserted") {
  SyntheticConfig scfg;
  scfg.num_classes = 4;
  scfg.sequences_per_class = 10;
  scfg.frames = 12;
  scfg.joints = 2;
  scfg.noise_std = 0.1;
  scfg.seed = 19;
  Dataset data = generate_synthetic(scfg);
  auto [train, test] = holdout_per_class(data, 3);
  TrainConfig cfg = probe_config();
  ModelParams encoder = init_params(resolve_model_config(cfg, train), 21);
  ProbeResult result = linear_probe(encoder, train, test, cfg, 23, "rand");
  MESSAGE("random-encoder probe accuracy: ", result.accuracy);
  CHECK(result.accuracy >= 0.0);
  CHECK(result.accuracy <= 1.0);
}

TEST_CASE("max_upward_jump on a nonincreasing curve is not positive") {
  TrainReport report;
  for (int e = 1; e <= 5; ++e) {
    EpochRow row;
    row.epoch = e;
    row.l_self = 10.0 - e;
    report.rows.push_back(row);
  }
  CHECK(max_upward_jump(report, 0) <= 0.0);
}

TEST_CASE("max_upward_jump matches the worked example") {
  TrainReport report;
  const double values[] = {1.0, 0.5, 2.0};
  for (int e = 0; e < 3; ++e) {
    EpochRow row;
    row.epoch = e + 1;
    row.l_self = values[e];
    report.rows.push_back(row);
  }
  CHECK(max_upward_jump(report, 1) == doctest::Approx(1.5));
  CHECK(max_upward_jump(report, 0) == doctest::Approx(1.5));
}

TEST_CASE("max_upward_jump validates the transition row") {
  TrainReport report;
  EpochRow row;
  row.epoch = 1;
  report.rows.push_back(row);
  CHECK_THROWS_AS(max_upward_jump(report, 0), DataError);
  CHECK_THROWS_AS(max_upward_jump(report, -1), DataError);
}

TEST_CASE("task subset parsing covers codes and names") {
  TaskConfig base;
  TaskConfig mj = task_subset_from_code("mj", base);
  CHECK(mj.prediction);
  CHECK(mj.jigsaw);
  CHECK(!mj.contrastive);
  TaskConfig c = task_subset_from_code("contrastive", base);
  CHECK(!c.prediction);
  CHECK(c.contrastive);
  TaskConfig pc = task_subset_from_code("prediction+contrastive", base);
  CHECK(pc.prediction);
  CHECK(!pc.jigsaw);
  CHECK(pc.contrastive);
  CHECK(task_label(mj) == "prediction+jigsaw");
  CHECK_THROWS_AS(task_subset_from_code("x", base), ConfigError);
  CHECK_THROWS_AS(task_subset_from_code("", base), ConfigError);
}

TEST_CASE("a singleton jigsaw cell reports zero motion and contrastive loss") {
  Dataset data = constant_class_data(2, 8, 27);
  TrainConfig cfg = probe_config();
  cfg.tasks = task_subset_from_code("j", cfg.tasks);
  auto [params, report] = pretrain_self_supervised(data, cfg, 29);
  for (const EpochRow& row : report.rows) {
    CHECK(row.l_m == 0.0);
    CHECK(row.l_c == 0.0);
    CHECK(row.l_j > 0.0);
    CHECK(row.l_self == row.l_j);
  }
}

TEST_CASE("the ablation grid has one row per requested subset") {
  SyntheticConfig scfg;
  scfg.num_classes = 2;
  scfg.sequences_per_class = 8;
  scfg.frames = 12;
  scfg.joints = 2;
  scfg.noise_std = 0.05;
  scfg.seed = 31;
  Dataset data = generate_synthetic(scfg);
  auto [train, test] = holdout_per_class(data, 2);

  TrainConfig cfg = probe_config();
  cfg.epochs = 2;
  cfg.pretrain_epochs = 2;
  std::vector<TaskConfig> combos = {task_subset_from_code("j", cfg.tasks),
                                    task_subset_from_code("mc", cfg.tasks),
                                    task_subset_from_code("mjc", cfg.tasks)};
  AblationGrid grid = ablation_sweep(train, test, combos, cfg, 33);
  REQUIRE(grid.cells.size() == 3);
  CHECK(grid.cells[0].label == "jigsaw");
  CHECK(grid.cells[1].label == "prediction+contrastive");
  CHECK(grid.cells[2].label == "prediction+jigsaw+contrastive");
  for (const AblationCell& cell : grid.cells) {
    CHECK(cell.accuracy >= 0.0);
    CHECK(cell.accuracy <= 1.0);
  }

  // identical seeds and subsets give identical accuracies; parallel run too
  AblationGrid again = ablation_sweep(train, test, combos, cfg, 33, 2);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    CHECK(grid.cells[i].accuracy == again.cells[i].accuracy);
  }

  const std::string csv = grid.to_csv();
  CHECK(csv.rfind("subset,accuracy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  CHECK_THROWS_AS(ablation_sweep(train, test, {}, cfg, 1), ConfigError);
}
