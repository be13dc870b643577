#include "skelssl/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "skelssl/io_util.hpp"
#include "skelssl/rng.hpp"

namespace skelssl {

Dataset::Dataset(std::vector<SkeletonSequence> sequences, int num_classes,
                 int joint_count, std::string split_tag)
    : sequences_(std::move(sequences)),
      num_classes_(num_classes),
      joint_count_(joint_count),
      split_tag_(std::move(split_tag)) {
  for (const SkeletonSequence& s : sequences_) {
    if (s.joint_count != joint_count_) {
      throw DataError("dataset: sequence '" + s.id + "' has " +
                      std::to_string(s.joint_count) + " joints, expected " +
                      std::to_string(joint_count_));
    }
    if (s.length() < 1) {
      throw DataError("dataset: sequence '" + s.id + "' is empty");
    }
    if (!s.frames.allFinite()) {
      throw DataError("dataset: sequence '" + s.id + "' has non-finite coordinates");
    }
    if (s.label && (*s.label < 0 || *s.label >= num_classes_)) {
      throw DataError("dataset: sequence '" + s.id + "' label " +
                      std::to_string(*s.label) + " outside [0, " +
                      std::to_string(num_classes_) + ")");
    }
  }
}

Dataset::Dataset(const Dataset& other)
    : sequences_(other.sequences_),
      num_classes_(other.num_classes_),
      joint_count_(other.joint_count_),
      split_tag_(other.split_tag_),
      reads_(other.reads_.load(std::memory_order_relaxed)) {}

Dataset::Dataset(Dataset&& other) noexcept
    : sequences_(std::move(other.sequences_)),
      num_classes_(other.num_classes_),
      joint_count_(other.joint_count_),
      split_tag_(std::move(other.split_tag_)),
      reads_(other.reads_.load(std::memory_order_relaxed)) {}

Dataset& Dataset::operator=(const Dataset& other) {
  if (this != &other) {
    sequences_ = other.sequences_;
    num_classes_ = other.num_classes_;
    joint_count_ = other.joint_count_;
    split_tag_ = other.split_tag_;
    reads_.store(other.reads_.load(std::memory_order_relaxed),
                 std::memory_order_relaxed);
  }
  return *this;
}

Dataset& Dataset::operator=(Dataset&& other) noexcept {
  if (this != &other) {
    sequences_ = std::move(other.sequences_);
    num_classes_ = other.num_classes_;
    joint_count_ = other.joint_count_;
    split_tag_ = std::move(other.split_tag_);
    reads_.store(other.reads_.load(std::memory_order_relaxed),
                 std::memory_order_relaxed);
  }
  return *this;
}

const SkeletonSequence& Dataset::sequence(std::size_t i) const {
  reads_.fetch_add(1, std::memory_order_relaxed);
  return sequences_.at(i);
}

namespace {

struct LineReader {
  std::istream& in;
  int line_no = 0;
  bool next(std::string& out) {
    if (!std::getline(in, out)) return false;
    ++line_no;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("parse error at line " + std::to_string(line_no) + ": " + what);
  }
};

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  LineReader reader{in};

  std::string line;
  if (!reader.next(line)) throw DataError("empty dataset file: " + path);
  std::istringstream header(line);
  std::string magic;
  long num_sequences = -1, joints = -1, num_classes = -1;
  header >> magic >> num_sequences >> joints >> num_classes;
  if (magic != "SKEL1" || header.fail() || num_sequences < 0 || joints < 1 ||
      num_classes < 0) {
    reader.fail("expected 'SKEL1 <num_sequences> <J> <num_classes>' header");
  }

  std::vector<SkeletonSequence> sequences;
  sequences.reserve(static_cast<std::size_t>(num_sequences));
  for (long s = 0; s < num_sequences; ++s) {
    if (!reader.next(line)) reader.fail("unexpected end of file, expected SEQ header");
    std::istringstream seq_header(line);
    std::string tag, id;
    long frames = -1, label = -2;
    seq_header >> tag >> id >> frames >> label;
    if (tag != "SEQ" || seq_header.fail() || frames < 1 || label < -1) {
      reader.fail("expected 'SEQ <id> <T> <label|-1>'");
    }

    SkeletonSequence seq;
    seq.id = id;
    seq.joint_count = static_cast<int>(joints);
    if (label >= 0) seq.label = static_cast<int>(label);
    seq.frames = Mat(frames, 3 * joints);
    for (long t = 0; t < frames; ++t) {
      if (!reader.next(line)) reader.fail("unexpected end of file inside sequence '" + id + "'");
      std::istringstream row(line);
      for (long c = 0; c < 3 * joints; ++c) {
        double v;
        if (!(row >> v)) {
          reader.fail("frame has fewer than " + std::to_string(3 * joints) +
                      " coordinates");
        }
        seq.frames(t, c) = v;
      }
      std::string extra;
      if (row >> extra) {
        reader.fail("frame has more than " + std::to_string(3 * joints) +
                    " coordinates");
      }
    }
    sequences.push_back(std::move(seq));
  }
  while (reader.next(line)) {
    if (!line.empty()) reader.fail("trailing content after last sequence");
  }
  return Dataset(std::move(sequences), static_cast<int>(num_classes),
                 static_cast<int>(joints));
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ostringstream out;
  out << "SKEL1 " << ds.size() << ' ' << ds.joint_count() << ' ' << ds.num_classes()
      << '\n';
  char buf[32];
  for (const SkeletonSequence& seq : ds.sequences()) {
    out << "SEQ " << seq.id << ' ' << seq.length() << ' '
        << (seq.label ? *seq.label : -1) << '\n';
    for (int t = 0; t < seq.length(); ++t) {
      for (int c = 0; c < 3 * seq.joint_count; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", seq.frames(t, c));
        if (c) out << ' ';
        out << buf;
      }
      out << '\n';
    }
  }
  atomic_write(path, out.str());
}

SkeletonSequence downsample(const SkeletonSequence& seq, int target_len) {
  if (target_len < 1) throw DataError("downsample: target length must be >= 1");
  const long t_in = seq.length();
  SkeletonSequence out;
  out.id = seq.id;
  out.joint_count = seq.joint_count;
  out.label = seq.label;
  out.frames = Mat(target_len, seq.frames.cols());
  for (long k = 0; k < target_len; ++k) {
    out.frames.row(k) = seq.frames.row((k * t_in) / target_len);
  }
  return out;
}

Dataset downsample(const Dataset& ds, int target_len) {
  std::vector<SkeletonSequence> out;
  out.reserve(ds.size());
  for (const SkeletonSequence& s : ds.sequences()) out.push_back(downsample(s, target_len));
  return Dataset(std::move(out), ds.num_classes(), ds.joint_count(), ds.split_tag());
}

SkeletonSequence center_sequence(const SkeletonSequence& seq) {
  SkeletonSequence out = seq;
  for (int axis = 0; axis < 3; ++axis) {
    double total = 0.0;
    for (int j = 0; j < seq.joint_count; ++j) total += seq.frames.col(3 * j + axis).sum();
    const double mean = total / (static_cast<double>(seq.length()) * seq.joint_count);
    for (int j = 0; j < seq.joint_count; ++j) out.frames.col(3 * j + axis).array() -= mean;
  }
  return out;
}

Dataset center_sequences(const Dataset& ds) {
  std::vector<SkeletonSequence> out;
  out.reserve(ds.size());
  for (const SkeletonSequence& s : ds.sequences()) out.push_back(center_sequence(s));
  return Dataset(std::move(out), ds.num_classes(), ds.joint_count(), ds.split_tag());
}

namespace {

constexpr std::uint64_t kTemplateStream = 0x74656d706c617465ULL;  // "template"
constexpr std::uint64_t kSampleStream = 0x73616d706c65ULL;        // "sample"

struct JointMotion {
  double offset[3];
  double amplitude[3];
  double frequency[3];
  double phase[3];
};

std::vector<JointMotion> class_motion(const SyntheticConfig& cfg, int action_class) {
  std::mt19937_64 rng(mix_seed(cfg.seed, kTemplateStream,
                               static_cast<std::uint64_t>(action_class)));
  std::uniform_real_distribution<double> offset(-0.8, 0.8);
  std::uniform_real_distribution<double> amplitude(0.3, 1.0);
  std::uniform_real_distribution<double> frequency(1.0, 2.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<JointMotion> motions(static_cast<std::size_t>(cfg.joints));
  for (JointMotion& m : motions) {
    for (int a = 0; a < 3; ++a) m.offset[a] = offset(rng);
    for (int a = 0; a < 3; ++a) m.amplitude[a] = amplitude(rng);
    for (int a = 0; a < 3; ++a) m.frequency[a] = frequency(rng);
    for (int a = 0; a < 3; ++a) m.phase[a] = phase(rng);
  }
  return motions;
}

}  // namespace

Mat synthetic_template(const SyntheticConfig& cfg, int action_class) {
  const std::vector<JointMotion> motions = class_motion(cfg, action_class);
  Mat frames(cfg.frames, 3 * cfg.joints);
  for (int t = 0; t < cfg.frames; ++t) {
    const double phase_t = 2.0 * std::numbers::pi * t / cfg.frames;
    for (int j = 0; j < cfg.joints; ++j) {
      const JointMotion& m = motions[static_cast<std::size_t>(j)];
      for (int a = 0; a < 3; ++a) {
        frames(t, 3 * j + a) =
            m.offset[a] + m.amplitude[a] * std::sin(m.frequency[a] * phase_t + m.phase[a]);
      }
    }
  }
  return frames;
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.num_classes < 1 || cfg.sequences_per_class < 1 || cfg.frames < 1 ||
      cfg.joints < 1) {
    throw ConfigError("generate_synthetic: all counts must be >= 1");
  }
  if (cfg.noise_std < 0.0) {
    throw ConfigError("generate_synthetic: noise_std must be >= 0");
  }
  std::vector<SkeletonSequence> sequences;
  sequences.reserve(static_cast<std::size_t>(cfg.num_classes) * cfg.sequences_per_class);
  for (int c = 0; c < cfg.num_classes; ++c) {
    const std::vector<JointMotion> motions = class_motion(cfg, c);
    const Mat tpl = synthetic_template(cfg, c);
    for (int i = 0; i < cfg.sequences_per_class; ++i) {
      std::mt19937_64 rng(mix_seed(cfg.seed, kSampleStream,
                                   static_cast<std::uint64_t>(c) * 1000003u +
                                       static_cast<std::uint64_t>(i)));
      std::normal_distribution<double> gauss(0.0, cfg.noise_std);
      std::uniform_real_distribution<double> noise_phase(0.0, 2.0 * std::numbers::pi);
      SkeletonSequence seq;
      seq.id = "c" + std::to_string(c) + "_s" + std::to_string(i);
      seq.joint_count = cfg.joints;
      seq.label = c;
      seq.frames = tpl;
      if (cfg.noise_std > 0.0) {
        // Recording nuisance, all scaled by noise_std and Gaussian-driven:
        //   - a per-sequence timing shift of the whole motion (Gaussian
        //     phase offset shared by all joints),
        //   - a slow per-joint wobble (quarter/half-cycle components) that
        //     behaves like stance drift,
        //   - a small white term.
        // The class template itself (offsets, amplitudes, frequencies) is
        // untouched, so the class stays recoverable.
        const double timing = 0.8 * gauss(rng);
        for (int j = 0; j < cfg.joints; ++j) {
          const JointMotion& m = motions[static_cast<std::size_t>(j)];
          for (int a = 0; a < 3; ++a) {
            double amp[2], phase[2];
            for (int k = 0; k < 2; ++k) {
              amp[k] = 0.5 * gauss(rng);
              phase[k] = noise_phase(rng);
            }
            for (int t = 0; t < cfg.frames; ++t) {
              const double u = static_cast<double>(t) / cfg.frames;
              const double cycle = 2.0 * std::numbers::pi * u;
              double wobble = 0.0;
              for (int k = 0; k < 2; ++k) {
                wobble += amp[k] * std::sin(0.25 * (k + 1) * cycle + phase[k]);
              }
              const double shifted =
                  m.offset[a] +
                  m.amplitude[a] *
                      std::sin(m.frequency[a] * cycle + m.phase[a] + timing);
              seq.frames(t, 3 * j + a) =
                  shifted + wobble + 0.25 * gauss(rng);
            }
          }
        }
      }
      sequences.push_back(std::move(seq));
    }
  }
  return Dataset(std::move(sequences), cfg.num_classes, cfg.joints);
}

std::pair<Dataset, Dataset> split_labeled(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.labeled_fraction > 0.0) || spec.labeled_fraction > 1.0) {
    throw ConfigError("split_labeled: fraction must be in (0, 1]");
  }
  if (ds.empty()) throw DataError("split_labeled: empty dataset");
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t labeled_size = static_cast<std::size_t>(
      std::lround(spec.labeled_fraction * static_cast<double>(n)));
  labeled_size = std::clamp<std::size_t>(labeled_size, 1, n);

  std::vector<SkeletonSequence> labeled, unlabeled;
  for (std::size_t i = 0; i < n; ++i) {
    SkeletonSequence seq = ds.sequences()[order[i]];
    if (i < labeled_size) {
      labeled.push_back(std::move(seq));
    } else {
      seq.label.reset();
      unlabeled.push_back(std::move(seq));
    }
  }
  return {Dataset(std::move(labeled), ds.num_classes(), ds.joint_count(), "train"),
          Dataset(std::move(unlabeled), ds.num_classes(), ds.joint_count(), "train")};
}

std::pair<Dataset, Dataset> holdout_per_class(const Dataset& ds, int test_per_class) {
  if (test_per_class < 0) throw ConfigError("holdout_per_class: negative count");
  std::vector<int> seen(static_cast<std::size_t>(ds.num_classes()), 0);
  for (const SkeletonSequence& s : ds.sequences()) {
    if (s.label) ++seen[static_cast<std::size_t>(*s.label)];
  }
  std::vector<int> kept(static_cast<std::size_t>(ds.num_classes()), 0);
  std::vector<SkeletonSequence> train, test;
  for (const SkeletonSequence& s : ds.sequences()) {
    if (!s.label) {
      train.push_back(s);
      continue;
    }
    const std::size_t c = static_cast<std::size_t>(*s.label);
    if (seen[c] - kept[c] <= test_per_class) {
      test.push_back(s);
    } else {
      train.push_back(s);
    }
    ++kept[c];
  }
  return {Dataset(std::move(train), ds.num_classes(), ds.joint_count(), "train"),
          Dataset(std::move(test), ds.num_classes(), ds.joint_count(), "test")};
}

}  // namespace skelssl
