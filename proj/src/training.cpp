#include "skelssl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "skelssl/evaluation.hpp"
#include "skelssl/io_util.hpp"
#include "skelssl/rng.hpp"

namespace skelssl {

namespace {

constexpr std::uint64_t kBatchStream = 0x62617463686573ULL;     // "batches"
constexpr std::uint64_t kTransformStream = 0x7472616e73ULL;     // "trans"
constexpr std::uint64_t kFinetuneStream = 0x66696e6574756eULL;  // "finetun"

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void Adam::step(const std::vector<std::pair<std::string, Mat*>>& params,
                const std::vector<Mat>& grads, double lr) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam: gradient count does not match parameter count");
  }
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& [name, mat] : params) {
      m_.push_back(Mat::Zero(mat->rows(), mat->cols()));
      v_.push_back(Mat::Zero(mat->rows(), mat->cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw DimensionError("adam: parameter list changed between steps");
  }
  ++steps_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, mat] = params[i];
    const Mat& g = grads[i];
    if (g.rows() != mat->rows() || g.cols() != mat->cols()) {
      throw DimensionError("adam: gradient shape mismatch for parameter '" + name + "'");
    }
    if (!g.allFinite()) {
      throw NumericError("adam: non-finite gradient for parameter '" + name + "'");
    }
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const Mat m_hat = m_[i] / bias1;
    const Mat v_hat = v_[i] / bias2;
    mat->array() -= lr * m_hat.array() / (v_hat.array().sqrt() + config_.epsilon);
  }
}

double Schedule::lr(long iteration) const {
  if (iteration < 0) throw ConfigError("schedule: negative iteration");
  const double stepped =
      base_lr * std::pow(decay, static_cast<double>(iteration / decay_every));
  return std::max(stepped, floor_lr);
}

double Schedule::theta(int epoch) const {
  if (epoch <= 0) return 0.0;
  if (moving_epochs <= 0) return 1.0;
  return std::min(static_cast<double>(epoch) / moving_epochs, 1.0);
}

void TrainReport::append(const TrainReport& other) {
  const int offset = rows.empty() ? 0 : rows.back().epoch;
  for (EpochRow row : other.rows) {
    row.epoch += offset;
    rows.push_back(row);
  }
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const EpochRow& r : rows) {
    out << r.epoch << ',' << format_double(r.l_m) << ',' << format_double(r.l_j) << ','
        << format_double(r.l_c) << ',' << format_double(r.l_self) << ','
        << format_double(r.l_cls) << ',' << format_double(r.theta) << ','
        << format_double(r.lr) << ',' << format_double(r.train_acc) << ','
        << format_double(r.test_acc) << '\n';
  }
  return out.str();
}

void TrainReport::write_csv(const std::string& path) const {
  atomic_write(path, to_csv());
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "rand") return Strategy::kRand;
  if (name == "pretrain") return Strategy::kPretrain;
  if (name == "moving") return Strategy::kMoving;
  if (name == "jointly") return Strategy::kJointly;
  if (name == "finetune") return Strategy::kFinetune;
  throw ConfigError("unknown strategy '" + name +
                    "' (expected rand|pretrain|moving|jointly|finetune)");
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kRand: return "rand";
    case Strategy::kPretrain: return "pretrain";
    case Strategy::kMoving: return "moving";
    case Strategy::kJointly: return "jointly";
    case Strategy::kFinetune: return "finetune";
  }
  return "?";
}

std::uint64_t finetune_seed(std::uint64_t seed) {
  return mix_seed(seed, kFinetuneStream);
}

ModelConfig resolve_model_config(const TrainConfig& config, const Dataset& data) {
  ModelConfig mc = config.model;
  mc.joints = data.joint_count();
  mc.num_classes = data.num_classes();
  mc.segments = config.transform.segments;
  mc.jigsaw_classes = config.tasks.jigsaw_variant == TaskVariant::kSpatial
                          ? factorial(5)
                          : factorial(config.transform.segments);
  return mc;
}

namespace {

// Pretext inputs for one batch, drawn in a fixed order from one RNG stream so
// runs that merely *log* the self-supervised losses consume the stream the
// same way as runs that optimize them.
struct PretextSamples {
  std::vector<MaskedSample> masked;
  std::vector<SpatialMaskedSample> spatial_masked;
  std::vector<Mat> jigsaw_frames;
  std::vector<int> jigsaw_targets;
  std::vector<TransformGroup> groups;
};

PretextSamples build_pretext(const std::vector<const Mat*>& frames,
                             const TaskConfig& tasks, const TransformParams& tp,
                             std::mt19937_64& rng) {
  PretextSamples out;
  for (const Mat* f : frames) {
    if (tasks.prediction) {
      if (tasks.prediction_variant == TaskVariant::kTemporal) {
        out.masked.push_back(mask_and_noise(*f, tp.t_prime, tp.noise_std, rng));
      } else {
        out.spatial_masked.push_back(spatial_mask(*f, tp.mask_fraction, rng));
      }
    }
    if (tasks.jigsaw) {
      if (tasks.jigsaw_variant == TaskVariant::kTemporal) {
        JigsawSample js = temporal_jigsaw(*f, tp.segments, rng);
        out.jigsaw_frames.push_back(std::move(js.shuffled));
        out.jigsaw_targets.push_back(js.permutation_id);
      } else {
        SpatialJigsawSample sj = spatial_jigsaw(*f, tp.body_parts, rng);
        out.jigsaw_frames.push_back(std::move(sj.shuffled));
        out.jigsaw_targets.push_back(sj.permutation_id);
      }
    }
    if (tasks.contrastive) {
      out.groups.push_back(build_transform_group(*f, tasks.contrastive_ops, tp, rng));
    }
  }
  return out;
}

std::vector<Eigen::Index> joint_columns(const std::vector<int>& joints) {
  std::vector<Eigen::Index> cols;
  cols.reserve(joints.size() * 3);
  for (int j : joints) {
    cols.push_back(3 * j);
    cols.push_back(3 * j + 1);
    cols.push_back(3 * j + 2);
  }
  return cols;
}

// L_self = L_m + L_j + L_c over the active subset, on the tape. Component
// values are written into `bundle`.
DiffValue pretext_loss_tape(Tape& t, const PretextSamples& s, const BoundModel& m,
                            const TaskConfig& tasks, LossBundle* bundle) {
  std::vector<DiffValue> parts;
  if (tasks.prediction) {
    std::vector<DiffValue> preds;
    std::vector<Mat> truths;
    if (tasks.prediction_variant == TaskVariant::kTemporal) {
      for (const MaskedSample& ms : s.masked) {
        preds.push_back(predict_future(t, ms.noisy_prefix,
                                       static_cast<int>(ms.target_suffix.rows()), m));
        truths.push_back(ms.target_suffix);
      }
    } else {
      for (const SpatialMaskedSample& sm : s.spatial_masked) {
        DiffValue full = predict_future(t, sm.corrupted,
                                        static_cast<int>(sm.corrupted.rows()), m);
        preds.push_back(t.select_cols(full, joint_columns(sm.masked_joints)));
        truths.push_back(sm.target);
      }
    }
    DiffValue l_m = motion_loss(t, preds, truths);
    bundle->motion = l_m.value()(0, 0);
    parts.push_back(l_m);
  }
  if (tasks.jigsaw) {
    std::vector<DiffValue> rows;
    rows.reserve(s.jigsaw_frames.size());
    for (const Mat& f : s.jigsaw_frames) rows.push_back(jigsaw_logits(t, f, m));
    DiffValue l_j = jigsaw_loss(t, t.concat_rows(rows), s.jigsaw_targets);
    bundle->jigsaw = l_j.value()(0, 0);
    parts.push_back(l_j);
  }
  if (tasks.contrastive) {
    std::vector<DiffValue> features;
    int group_size = 0;
    for (const TransformGroup& g : s.groups) {
      features.push_back(project(t, g.original, m));
      for (const Mat& member : g.transformed) features.push_back(project(t, member, m));
      group_size = 1 + static_cast<int>(g.transformed.size());
    }
    DiffValue l_c = contrastive_loss(t, features, group_size);
    bundle->contrastive = l_c.value()(0, 0);
    parts.push_back(l_c);
  }
  if (parts.empty()) throw ConfigError("no pretext task active");
  DiffValue total = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) total = t.add(total, parts[i]);
  return total;
}

// Inference-path twin of pretext_loss_tape, for epochs that only log L_self.
LossBundle pretext_loss_value(const PretextSamples& s, const ModelParams& p,
                              const TaskConfig& tasks) {
  LossBundle bundle;
  if (tasks.prediction) {
    std::vector<Mat> preds;
    std::vector<Mat> truths;
    if (tasks.prediction_variant == TaskVariant::kTemporal) {
      for (const MaskedSample& ms : s.masked) {
        preds.push_back(predict_future_values(
            ms.noisy_prefix, static_cast<int>(ms.target_suffix.rows()), p));
        truths.push_back(ms.target_suffix);
      }
    } else {
      for (const SpatialMaskedSample& sm : s.spatial_masked) {
        Mat full = predict_future_values(sm.corrupted,
                                         static_cast<int>(sm.corrupted.rows()), p);
        const auto cols = joint_columns(sm.masked_joints);
        Mat picked(full.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) picked.col(k) = full.col(cols[k]);
        preds.push_back(std::move(picked));
        truths.push_back(sm.target);
      }
    }
    bundle.motion = motion_loss_value(preds, truths);
  }
  if (tasks.jigsaw) {
    Mat logits(static_cast<Eigen::Index>(s.jigsaw_frames.size()),
               p.config.jigsaw_classes);
    for (std::size_t i = 0; i < s.jigsaw_frames.size(); ++i) {
      logits.row(static_cast<Eigen::Index>(i)) =
          jigsaw_logits_values(s.jigsaw_frames[i], p);
    }
    bundle.jigsaw = jigsaw_loss_value(logits, s.jigsaw_targets);
  }
  if (tasks.contrastive && !s.groups.empty()) {
    const int group_size = 1 + static_cast<int>(s.groups.front().transformed.size());
    Mat features(static_cast<Eigen::Index>(s.groups.size()) * group_size,
                 p.config.feature_dim());
    Eigen::Index r = 0;
    for (const TransformGroup& g : s.groups) {
      features.row(r++) = project_values(g.original, p);
      for (const Mat& member : g.transformed) features.row(r++) = project_values(member, p);
    }
    bundle.contrastive = contrastive_loss_value(features, group_size);
  }
  return bundle;
}

DiffValue classification_logits_tape(Tape& t, const std::vector<const Mat*>& frames,
                                     const BoundModel& m) {
  std::vector<DiffValue> rows;
  rows.reserve(frames.size());
  for (const Mat* f : frames) rows.push_back(classify(t, *f, m, ClassifyMode::kFull));
  return t.concat_rows(rows);
}

std::vector<std::pair<std::string, Mat*>> trainable_entries(ModelParams& params,
                                                            bool freeze_encoder) {
  auto all = params.entries();
  if (!freeze_encoder) return all;
  std::vector<std::pair<std::string, Mat*>> kept;
  for (auto& e : all) {
    if (e.first.rfind("enc.", 0) != 0) kept.push_back(e);
  }
  return kept;
}

// Gradients for the selected subset, read back from the bound tape leaves.
std::vector<Mat> collect_grads(const std::vector<DiffValue>& bound_entries,
                               const std::vector<bool>& keep) {
  std::vector<Mat> grads;
  grads.reserve(bound_entries.size());
  for (std::size_t i = 0; i < bound_entries.size(); ++i) {
    if (keep[i]) grads.push_back(bound_entries[i].grad());
  }
  return grads;
}

std::vector<bool> keep_mask(const ModelParams& params, bool freeze_encoder) {
  std::vector<bool> keep;
  for (const auto& [name, mat] : params.entries()) {
    keep.push_back(!(freeze_encoder && name.rfind("enc.", 0) == 0));
  }
  return keep;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size,
                                                   std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, at + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<long>(at),
                         order.begin() + static_cast<long>(end));
  }
  return batches;
}

void check_config_compatible(const ModelConfig& a, const ModelConfig& b) {
  if (a.joints != b.joints || a.hidden != b.hidden ||
      a.jigsaw_classes != b.jigsaw_classes || a.num_classes != b.num_classes) {
    throw ConfigError("pretrained checkpoint does not match the run configuration");
  }
}

double wall_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::pair<ModelParams, TrainReport> pretrain_self_supervised(const Dataset& data,
                                                             const TrainConfig& config,
                                                             std::uint64_t seed) {
  if (data.empty()) throw DataError("pretrain: empty dataset");
  if (!config.tasks.any()) throw ConfigError("pretrain: no pretext task active");
  if (config.batch_size < 1) throw ConfigError("pretrain: batch size must be >= 1");

  const ModelConfig mc = resolve_model_config(config, data);
  ModelParams params = init_params(mc, seed);
  auto trainable = params.entries();
  const std::vector<bool> keep(trainable.size(), true);

  Adam adam;
  std::mt19937_64 batch_rng(mix_seed(seed, kBatchStream));
  std::mt19937_64 transform_rng(mix_seed(seed, kTransformStream));
  TrainReport report;
  long iteration = 0;

  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double epoch_lr = config.schedule.lr(iteration);
    LossBundle sums;
    for (const auto& batch : make_batches(data.size(), config.batch_size, batch_rng)) {
      std::vector<const Mat*> frames;
      frames.reserve(batch.size());
      for (std::size_t idx : batch) frames.push_back(&data.sequence(idx).frames);
      PretextSamples samples =
          build_pretext(frames, config.tasks, config.transform, transform_rng);

      Tape tape;
      BoundModel bound = bind(tape, params);
      LossBundle bundle;
      DiffValue l_self = pretext_loss_tape(tape, samples, bound, config.tasks, &bundle);
      tape.backward(l_self);
      adam.step(trainable, collect_grads(bound.entries(), keep),
                config.schedule.lr(iteration));
      ++iteration;

      sums.motion += bundle.motion;
      sums.jigsaw += bundle.jigsaw;
      sums.contrastive += bundle.contrastive;
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    EpochRow row;
    row.epoch = epoch;
    row.l_m = sums.motion * inv_n;
    row.l_j = sums.jigsaw * inv_n;
    row.l_c = sums.contrastive * inv_n;
    row.l_self = row.l_m + row.l_j + row.l_c;
    row.l_cls = kNaN;
    row.theta = kNaN;
    row.lr = epoch_lr;
    row.train_acc = kNaN;
    row.test_acc = kNaN;
    row.wall_seconds = wall_since(start);
    report.rows.push_back(row);
  }
  return {std::move(params), std::move(report)};
}

std::pair<ModelParams, TrainReport> train_supervised(const Dataset& train,
                                                     Strategy strategy,
                                                     const ModelParams* init,
                                                     const TrainConfig& config,
                                                     std::uint64_t seed,
                                                     const Dataset* test) {
  if (train.empty()) throw DataError("train_supervised: empty dataset");
  if (config.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  for (const SkeletonSequence& s : train.sequences()) {
    if (!s.label) {
      throw DataError("train_supervised: unlabeled sample '" + s.id +
                      "' in supervised training");
    }
  }
  const bool needs_init = strategy == Strategy::kPretrain ||
                          strategy == Strategy::kMoving ||
                          strategy == Strategy::kFinetune;
  if (needs_init && !init) {
    throw ConfigError(strategy_name(strategy) + " requires --init");
  }

  const ModelConfig mc = resolve_model_config(config, train);
  ModelParams params = init ? *init : init_params(mc, seed);
  if (init) check_config_compatible(init->config, mc);

  const bool freeze_encoder = strategy == Strategy::kPretrain;
  auto trainable = trainable_entries(params, freeze_encoder);
  const std::vector<bool> keep = keep_mask(params, freeze_encoder);

  Adam adam;
  std::mt19937_64 batch_rng(mix_seed(seed, kBatchStream));
  std::mt19937_64 transform_rng(mix_seed(seed, kTransformStream));
  TrainReport report;
  long iteration = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double epoch_lr = config.schedule.lr(iteration);
    const double theta =
        strategy == Strategy::kMoving ? config.schedule.theta(epoch) : kNaN;
    LossBundle sums;
    for (const auto& batch : make_batches(train.size(), config.batch_size, batch_rng)) {
      std::vector<const Mat*> frames;
      std::vector<int> labels;
      frames.reserve(batch.size());
      labels.reserve(batch.size());
      for (std::size_t idx : batch) {
        const SkeletonSequence& s = train.sequence(idx);
        frames.push_back(&s.frames);
        labels.push_back(*s.label);
      }
      PretextSamples samples =
          build_pretext(frames, config.tasks, config.transform, transform_rng);

      double self_weight = 0.0;
      if (strategy == Strategy::kMoving) self_weight = 1.0 - theta;
      if (strategy == Strategy::kJointly) self_weight = config.schedule.omega;

      Tape tape;
      BoundModel bound = bind(tape, params);
      DiffValue l_cls =
          classification_loss(tape, classification_logits_tape(tape, frames, bound), labels);
      LossBundle bundle;
      bundle.classification = l_cls.value()(0, 0);

      DiffValue root = l_cls;
      if (self_weight > 0.0) {
        DiffValue l_self = pretext_loss_tape(tape, samples, bound, config.tasks, &bundle);
        root = strategy == Strategy::kMoving
                   ? combine_moving(tape, l_cls, l_self, theta)
                   : combine_joint(tape, l_cls, l_self, config.schedule.omega);
      } else {
        LossBundle logged = pretext_loss_value(samples, params, config.tasks);
        bundle.motion = logged.motion;
        bundle.jigsaw = logged.jigsaw;
        bundle.contrastive = logged.contrastive;
      }
      tape.backward(root);
      adam.step(trainable, collect_grads(bound.entries(), keep),
                config.schedule.lr(iteration));
      ++iteration;

      sums.motion += bundle.motion;
      sums.jigsaw += bundle.jigsaw;
      sums.contrastive += bundle.contrastive;
      sums.classification += bundle.classification;
    }
    const double inv_n = 1.0 / static_cast<double>(train.size());
    EpochRow row;
    row.epoch = epoch;
    row.l_m = sums.motion * inv_n;
    row.l_j = sums.jigsaw * inv_n;
    row.l_c = sums.contrastive * inv_n;
    row.l_self = row.l_m + row.l_j + row.l_c;
    row.l_cls = sums.classification * inv_n;
    row.theta = theta;
    row.lr = epoch_lr;
    row.train_acc = dataset_accuracy(train, params, ClassifyMode::kFull);
    row.test_acc = test ? dataset_accuracy(*test, params, ClassifyMode::kFull) : kNaN;
    row.wall_seconds = wall_since(start);
    report.rows.push_back(row);
  }
  return {std::move(params), std::move(report)};
}

std::pair<ModelParams, TrainReport> train_semi_supervised(const Dataset& labeled,
                                                          const Dataset& unlabeled,
                                                          const TrainConfig& config,
                                                          std::uint64_t seed,
                                                          const Dataset* test) {
  if (labeled.joint_count() != unlabeled.joint_count() && !unlabeled.empty()) {
    throw DataError("semi: joint counts disagree between splits");
  }
  std::set<std::string> labeled_ids;
  for (const SkeletonSequence& s : labeled.sequences()) labeled_ids.insert(s.id);
  for (const SkeletonSequence& s : unlabeled.sequences()) {
    if (labeled_ids.count(s.id)) {
      throw DataError("semi: overlapping splits, sequence '" + s.id +
                      "' appears in both");
    }
  }

  std::vector<SkeletonSequence> combined;
  combined.reserve(labeled.size() + unlabeled.size());
  for (const SkeletonSequence& s : labeled.sequences()) combined.push_back(s);
  for (const SkeletonSequence& s : unlabeled.sequences()) combined.push_back(s);
  Dataset corpus(std::move(combined), labeled.num_classes(), labeled.joint_count(),
                 "train");

  auto [pretrained, report] = pretrain_self_supervised(corpus, config, seed);
  auto [params, finetune_report] = train_supervised(
      labeled, Strategy::kFinetune, &pretrained, config, finetune_seed(seed), test);
  report.append(finetune_report);
  return {std::move(params), std::move(report)};
}

std::pair<ModelParams, TrainReport> transfer_learning(const Dataset& source,
                                                      const Dataset& target,
                                                      const TrainConfig& config,
                                                      std::uint64_t seed,
                                                      const Dataset* test) {
  if (source.joint_count() != target.joint_count()) {
    throw DataError("transfer: joint count mismatch, source J=" +
                    std::to_string(source.joint_count()) + " vs target J=" +
                    std::to_string(target.joint_count()));
  }
  auto [pretrained, report] = pretrain_self_supervised(source, config, seed);

  // Fresh classifier sized for the target label space; encoder and heads
  // carry over from the source pretraining.
  const ModelConfig target_mc = resolve_model_config(config, target);
  ModelParams params = init_params(target_mc, finetune_seed(seed));
  auto src_entries = pretrained.entries();
  auto dst_entries = params.entries();
  for (std::size_t i = 0; i < src_entries.size(); ++i) {
    const std::string& name = src_entries[i].first;
    const bool shared = name.rfind("enc.", 0) == 0 || name.rfind("dec.", 0) == 0 ||
                        name.rfind("jig.", 0) == 0 || name.rfind("proj.", 0) == 0;
    if (shared) *dst_entries[i].second = *src_entries[i].second;
  }

  auto [final_params, finetune_report] = train_supervised(
      target, Strategy::kFinetune, &params, config, finetune_seed(seed), test);
  report.append(finetune_report);
  return {std::move(final_params), std::move(report)};
}

}  // namespace skelssl
