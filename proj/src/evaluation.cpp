#include "skelssl/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "skelssl/io_util.hpp"
#include "skelssl/rng.hpp"

namespace skelssl {

double accuracy(const Mat& logits, const std::vector<int>& labels) {
  if (logits.rows() == 0) throw DataError("accuracy: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw DimensionError("accuracy: label count does not match rows");
  }
  long correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;  // strict: ties keep the lowest
    }
    if (static_cast<int>(best) == labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

double dataset_accuracy(const Dataset& data, const ModelParams& params,
                        ClassifyMode mode) {
  if (data.empty()) throw DataError("accuracy: empty dataset");
  Mat logits(static_cast<Eigen::Index>(data.size()), params.config.num_classes);
  std::vector<int> labels;
  labels.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SkeletonSequence& s = data.sequence(i);
    if (!s.label) throw DataError("accuracy: unlabeled sequence '" + s.id + "'");
    labels.push_back(*s.label);
    logits.row(static_cast<Eigen::Index>(i)) = classify_values(s.frames, params, mode);
  }
  return accuracy(logits, labels);
}

ProbeResult linear_probe(const ModelParams& encoder, const Dataset& train,
                         const Dataset& test, const TrainConfig& config,
                         std::uint64_t seed, const std::string& encoder_source) {
  if (train.empty() || test.empty()) throw DataError("linear_probe: empty split");

  // Pooled features are fixed for the whole probe run; compute them once.
  const int feat = encoder.config.feature_dim();
  Mat train_features(static_cast<Eigen::Index>(train.size()), feat);
  std::vector<int> train_labels;
  train_labels.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const SkeletonSequence& s = train.sequence(i);
    if (!s.label) throw DataError("linear_probe: unlabeled sequence '" + s.id + "'");
    train_labels.push_back(*s.label);
    train_features.row(static_cast<Eigen::Index>(i)) =
        encode_values(s.frames, encoder).pooled;
  }

  Mat probe_w = Mat::Zero(feat, encoder.config.num_classes);
  Mat probe_b = Mat::Zero(1, encoder.config.num_classes);
  std::vector<std::pair<std::string, Mat*>> entries = {{"probe.w", &probe_w},
                                                       {"probe.b", &probe_b}};
  Adam adam;
  std::mt19937_64 batch_rng(mix_seed(seed, 0x70726f6265ULL));  // "probe"
  long iteration = 0;

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= config.probe_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), batch_rng);
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
      Mat batch(static_cast<Eigen::Index>(end - at), feat);
      std::vector<int> labels;
      labels.reserve(end - at);
      for (std::size_t k = at; k < end; ++k) {
        batch.row(static_cast<Eigen::Index>(k - at)) =
            train_features.row(static_cast<Eigen::Index>(order[k]));
        labels.push_back(train_labels[order[k]]);
      }
      Tape tape;
      DiffValue w = tape.leaf(probe_w);
      DiffValue b = tape.leaf(probe_b);
      DiffValue loss =
          tape.cross_entropy(tape.affine(tape.constant(batch), w, b), labels);
      tape.backward(loss);
      adam.step(entries, {w.grad(), b.grad()}, config.schedule.lr(iteration));
      ++iteration;
    }
  }

  ModelParams probed = encoder;
  probed.probe_w = probe_w;
  probed.probe_b = probe_b;
  ProbeResult result;
  result.accuracy = dataset_accuracy(test, probed, ClassifyMode::kLinearProbe);
  result.feature_dim = feat;
  result.encoder_source = encoder_source;
  return result;
}

std::string task_label(const TaskConfig& tasks) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += '+';
    out += name;
  };
  if (tasks.prediction) add("prediction");
  if (tasks.jigsaw) add("jigsaw");
  if (tasks.contrastive) add("contrastive");
  return out.empty() ? "none" : out;
}

TaskConfig task_subset_from_code(const std::string& code, const TaskConfig& base) {
  TaskConfig subset = base;
  subset.prediction = subset.jigsaw = subset.contrastive = false;
  if (code.find('+') != std::string::npos || code.size() > 3) {
    std::stringstream ss(code);
    std::string word;
    while (std::getline(ss, word, '+')) {
      if (word == "prediction" || word == "m") subset.prediction = true;
      else if (word == "jigsaw" || word == "j") subset.jigsaw = true;
      else if (word == "contrastive" || word == "c") subset.contrastive = true;
      else throw ConfigError("unknown task '" + word + "' in subset '" + code + "'");
    }
  } else {
    for (char c : code) {
      if (c == 'm') subset.prediction = true;
      else if (c == 'j') subset.jigsaw = true;
      else if (c == 'c') subset.contrastive = true;
      else throw ConfigError(std::string("unknown task code '") + c + "' in subset '" +
                             code + "' (use m, j, c)");
    }
  }
  if (!subset.any()) throw ConfigError("empty task subset '" + code + "'");
  return subset;
}

std::string AblationGrid::to_csv() const {
  std::ostringstream out;
  out << "subset,accuracy\n";
  for (const AblationCell& cell : cells) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", cell.accuracy);
    out << cell.label << ',' << buf << '\n';
  }
  return out.str();
}

void AblationGrid::write_csv(const std::string& path) const {
  atomic_write(path, to_csv());
}

AblationGrid ablation_sweep(const Dataset& train, const Dataset& test,
                            const std::vector<TaskConfig>& combinations,
                            const TrainConfig& config, std::uint64_t seed, int jobs) {
  if (combinations.empty()) throw ConfigError("ablation_sweep: no combinations");
  for (const TaskConfig& tasks : combinations) {
    if (!tasks.any()) throw ConfigError("ablation_sweep: empty task subset");
  }
  AblationGrid grid;
  grid.cells.resize(combinations.size());

  auto run_cell = [&](std::size_t i) {
    TrainConfig cell_config = config;
    cell_config.tasks = combinations[i];
    auto [pretrained, pre_report] = pretrain_self_supervised(train, cell_config, seed);
    auto [params, report] =
        train_supervised(train, Strategy::kJointly, &pretrained, cell_config,
                         finetune_seed(seed), &test);
    (void)pre_report;
    (void)report;
    grid.cells[i].tasks = combinations[i];
    grid.cells[i].label = task_label(combinations[i]);
    grid.cells[i].accuracy = dataset_accuracy(test, params, ClassifyMode::kFull);
  };

  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < combinations.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= grid.cells.size()) break;
          run_cell(i);
        }
      });
    }
    for (std::thread& w : workers) w.join();
  }
  return grid;
}

double max_upward_jump(const TrainReport& report, int transition_row) {
  const int n = static_cast<int>(report.rows.size());
  if (transition_row < 0 || transition_row > n - 2) {
    throw DataError("max_upward_jump: transition " + std::to_string(transition_row) +
                    " leaves no epoch pairs in a report of " + std::to_string(n) +
                    " rows");
  }
  double jump = -std::numeric_limits<double>::infinity();
  for (int e = transition_row; e + 1 < n; ++e) {
    jump = std::max(jump, report.rows[static_cast<std::size_t>(e + 1)].l_self -
                              report.rows[static_cast<std::size_t>(e)].l_self);
  }
  return jump;
}

}  // namespace skelssl
