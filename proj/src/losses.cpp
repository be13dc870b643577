#include "skelssl/losses.hpp"

#include <cmath>
#include <string>

namespace skelssl {

namespace {

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw ConfigError("combine_moving: theta = " + std::to_string(theta) +
                      " outside [0, 1]");
  }
}

void check_omega(double omega) {
  if (!(omega >= 0.0)) {
    throw ConfigError("combine_joint: omega = " + std::to_string(omega) +
                      " must be non-negative");
  }
}

}  // namespace

DiffValue motion_loss(Tape& t, const std::vector<DiffValue>& predicted,
                      const std::vector<Mat>& truth) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw DimensionError("motion_loss: batch sizes disagree");
  }
  DiffValue total;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const DiffValue& pred = predicted[i];
    if (pred.rows() != truth[i].rows() || pred.cols() != truth[i].cols()) {
      throw DimensionError("motion_loss: prediction " + std::to_string(pred.rows()) +
                           "x" + std::to_string(pred.cols()) + " vs truth " +
                           std::to_string(truth[i].rows()) + "x" +
                           std::to_string(truth[i].cols()));
    }
    DiffValue diff = t.sub(pred, t.constant(truth[i]));
    DiffValue sq = t.sum(t.mul(diff, diff));
    total = total.valid() ? t.add(total, sq) : sq;
  }
  return total;
}

double motion_loss_value(const std::vector<Mat>& predicted,
                         const std::vector<Mat>& truth) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw DimensionError("motion_loss: batch sizes disagree");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].rows() != truth[i].rows() ||
        predicted[i].cols() != truth[i].cols()) {
      throw DimensionError("motion_loss: shapes disagree");
    }
    total += (predicted[i] - truth[i]).squaredNorm();
  }
  return total;
}

DiffValue jigsaw_loss(Tape& t, DiffValue logits, const std::vector<int>& targets) {
  return t.cross_entropy(logits, targets);
}

double jigsaw_loss_value(const Mat& logits, const std::vector<int>& targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw DimensionError("cross_entropy: target count does not match rows");
  }
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int target = targets[static_cast<std::size_t>(r)];
    if (target < 0 || target >= logits.cols()) {
      throw DataError("cross_entropy: target out of range");
    }
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, target);
  }
  return total;
}

namespace {

std::vector<int> contrastive_targets(std::size_t count, int group_size) {
  std::vector<int> targets(count);
  for (std::size_t i = 0; i < count; ++i) {
    targets[i] = static_cast<int>(i) / group_size;
  }
  return targets;
}

}  // namespace

DiffValue contrastive_loss(Tape& t, const std::vector<DiffValue>& features,
                           int group_size) {
  if (group_size < 1) throw DimensionError("contrastive_loss: group size must be >= 1");
  if (features.empty() ||
      features.size() % static_cast<std::size_t>(group_size) != 0) {
    throw DimensionError("contrastive_loss: " + std::to_string(features.size()) +
                         " features do not form groups of " +
                         std::to_string(group_size));
  }
  const std::size_t groups = features.size() / static_cast<std::size_t>(group_size);

  std::vector<DiffValue> means(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    DiffValue acc = features[g * group_size];
    for (int j = 1; j < group_size; ++j) {
      acc = t.add(acc, features[g * group_size + static_cast<std::size_t>(j)]);
    }
    means[g] = t.scale(acc, 1.0 / group_size);
  }

  DiffValue z = t.normalize_rows(t.concat_rows(features));
  DiffValue z_bar = t.normalize_rows(t.concat_rows(means));
  DiffValue sims = t.matmul(z, t.transpose(z_bar));  // NM × N cosine similarities
  return t.cross_entropy(sims, contrastive_targets(features.size(), group_size));
}

double contrastive_loss_value(const Mat& features, int group_size) {
  if (group_size < 1) throw DimensionError("contrastive_loss: group size must be >= 1");
  if (features.rows() == 0 || features.rows() % group_size != 0) {
    throw DimensionError("contrastive_loss: rows do not form groups");
  }
  const Eigen::Index groups = features.rows() / group_size;
  Mat means(groups, features.cols());
  for (Eigen::Index g = 0; g < groups; ++g) {
    means.row(g) = features.middleRows(g * group_size, group_size).colwise().sum() *
                   (1.0 / group_size);
  }
  auto normalize = [](Mat m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double n = m.row(r).norm();
      if (n == 0.0) throw DegenerateVectorError("contrastive_loss: zero-norm feature");
      m.row(r) /= n;
    }
    return m;
  };
  const Mat sims = normalize(features) * normalize(means).transpose();
  return jigsaw_loss_value(
      sims, contrastive_targets(static_cast<std::size_t>(features.rows()), group_size));
}

DiffValue classification_loss(Tape& t, DiffValue logits, const std::vector<int>& labels) {
  return t.cross_entropy(logits, labels);
}

double classification_loss_value(const Mat& logits, const std::vector<int>& labels) {
  return jigsaw_loss_value(logits, labels);
}

DiffValue combine_moving(Tape& t, DiffValue l_cls, DiffValue l_self, double theta) {
  check_theta(theta);
  return t.add(t.scale(l_cls, theta), t.scale(l_self, 1.0 - theta));
}

double combine_moving(double l_cls, double l_self, double theta) {
  check_theta(theta);
  return theta * l_cls + (1.0 - theta) * l_self;
}

DiffValue combine_joint(Tape& t, DiffValue l_cls, DiffValue l_self, double omega) {
  check_omega(omega);
  return t.add(l_cls, t.scale(l_self, omega));
}

double combine_joint(double l_cls, double l_self, double omega) {
  check_omega(omega);
  return l_cls + omega * l_self;
}

}  // namespace skelssl
