#include "skelssl/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace skelssl {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

bool parse_int(const std::string& v, long& out) {
  std::size_t used = 0;
  try {
    out = std::stol(v, &used);
  } catch (...) {
    return false;
  }
  return used == v.size();
}

bool parse_double(const std::string& v, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(v, &used);
  } catch (...) {
    return false;
  }
  return used == v.size();
}

using Setter = std::function<bool(RunConfig&, const std::string&)>;

Setter int_field(int RunConfig::* field) {
  return [field](RunConfig& c, const std::string& v) {
    long parsed;
    if (!parse_int(v, parsed)) return false;
    c.*field = static_cast<int>(parsed);
    return true;
  };
}

Setter long_field(long RunConfig::* field) {
  return [field](RunConfig& c, const std::string& v) {
    long parsed;
    if (!parse_int(v, parsed)) return false;
    c.*field = parsed;
    return true;
  };
}

Setter double_field(double RunConfig::* field) {
  return [field](RunConfig& c, const std::string& v) {
    double parsed;
    if (!parse_double(v, parsed)) return false;
    c.*field = parsed;
    return true;
  };
}

Setter bool_field(bool RunConfig::* field) {
  return [field](RunConfig& c, const std::string& v) {
    bool parsed;
    if (!parse_bool(v, parsed)) return false;
    c.*field = parsed;
    return true;
  };
}

Setter string_field(std::string RunConfig::* field) {
  return [field](RunConfig& c, const std::string& v) {
    c.*field = v;
    return true;
  };
}

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = {
      {"data.train", string_field(&RunConfig::data_train)},
      {"data.test", string_field(&RunConfig::data_test)},
      {"data.downsample", int_field(&RunConfig::data_downsample)},
      {"data.center", bool_field(&RunConfig::data_center)},
      {"synthetic.classes", int_field(&RunConfig::synthetic_classes)},
      {"synthetic.per_class", int_field(&RunConfig::synthetic_per_class)},
      {"synthetic.test_per_class", int_field(&RunConfig::synthetic_test_per_class)},
      {"synthetic.frames", int_field(&RunConfig::synthetic_frames)},
      {"synthetic.joints", int_field(&RunConfig::synthetic_joints)},
      {"synthetic.noise_std", double_field(&RunConfig::synthetic_noise_std)},
      {"synthetic.seed", long_field(&RunConfig::synthetic_seed)},
      {"model.hidden", int_field(&RunConfig::model_hidden)},
      {"model.segments", int_field(&RunConfig::model_segments)},
      {"model.t_prime", int_field(&RunConfig::model_t_prime)},
      {"model.noise_std", double_field(&RunConfig::model_noise_std)},
      {"model.mask_fraction", double_field(&RunConfig::model_mask_fraction)},
      {"model.body_parts", string_field(&RunConfig::model_body_parts)},
      {"tasks.prediction", bool_field(&RunConfig::tasks_prediction)},
      {"tasks.jigsaw", bool_field(&RunConfig::tasks_jigsaw)},
      {"tasks.contrastive", bool_field(&RunConfig::tasks_contrastive)},
      {"tasks.prediction_variant", string_field(&RunConfig::tasks_prediction_variant)},
      {"tasks.jigsaw_variant", string_field(&RunConfig::tasks_jigsaw_variant)},
      {"tasks.contrastive_ops", string_field(&RunConfig::tasks_contrastive_ops)},
      {"train.strategy", string_field(&RunConfig::train_strategy)},
      {"train.epochs", int_field(&RunConfig::train_epochs)},
      {"train.pretrain_epochs", int_field(&RunConfig::train_pretrain_epochs)},
      {"train.moving_epochs", int_field(&RunConfig::train_moving_epochs)},
      {"train.omega", double_field(&RunConfig::train_omega)},
      {"train.batch", int_field(&RunConfig::train_batch)},
      {"train.probe_epochs", int_field(&RunConfig::train_probe_epochs)},
      {"train.fraction", double_field(&RunConfig::train_fraction)},
      {"train.seed", long_field(&RunConfig::train_seed)},
      {"train.init", string_field(&RunConfig::train_init)},
      {"train.jobs", int_field(&RunConfig::train_jobs)},
      {"sweep.subsets", string_field(&RunConfig::sweep_subsets)},
      {"output.dir", string_field(&RunConfig::output_dir)},
  };
  return table;
}

void set_key(const std::string& key, const std::string& value, RunConfig& config,
             std::vector<std::string>& errors, const std::string& where) {
  const auto& table = key_table();
  auto it = table.find(key);
  if (it == table.end()) {
    errors.push_back(where + "unknown key '" + key + "'");
    return;
  }
  if (!it->second(config, value)) {
    errors.push_back(where + "invalid value '" + value + "' for key '" + key + "'");
  }
}

}  // namespace

void load_config_file(const std::string& path, RunConfig& config,
                      std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot open config file: " + path);
    return;
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      errors.push_back(where + "expected 'section.key = value'");
      continue;
    }
    set_key(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)), config, errors,
            where);
  }
}

void apply_override(const std::string& assignment, RunConfig& config,
                    std::vector<std::string>& errors) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    errors.push_back("override '" + assignment + "' is not of the form key=value");
    return;
  }
  set_key(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), config,
          errors, "");
}

std::vector<std::vector<int>> parse_body_parts(const std::string& text) {
  std::vector<std::vector<int>> parts;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::vector<int> indices;
    std::stringstream items(trim(group));
    std::string item;
    while (std::getline(items, item, ',')) {
      long v;
      if (!parse_int(trim(item), v)) {
        throw ConfigError("model.body_parts: invalid joint index '" + trim(item) + "'");
      }
      indices.push_back(static_cast<int>(v));
    }
    if (!indices.empty()) parts.push_back(std::move(indices));
  }
  return parts;
}

std::vector<TransformOp> parse_transform_ops(const std::string& text) {
  std::vector<TransformOp> ops;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    const std::string name = trim(item);
    if (name.empty()) continue;
    if (name == "temporal_mask") ops.push_back(TransformOp::kTemporalMask);
    else if (name == "temporal_jigsaw") ops.push_back(TransformOp::kTemporalJigsaw);
    else if (name == "spatial_mask") ops.push_back(TransformOp::kSpatialMask);
    else if (name == "spatial_jigsaw") ops.push_back(TransformOp::kSpatialJigsaw);
    else {
      throw ConfigError("tasks.contrastive_ops: unknown operator '" + name + "'");
    }
  }
  return ops;
}

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> errors;
  auto require = [&errors](bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  };
  require(c.synthetic_classes >= 1, "synthetic.classes must be >= 1");
  require(c.synthetic_per_class >= 1, "synthetic.per_class must be >= 1");
  require(c.synthetic_test_per_class >= 0, "synthetic.test_per_class must be >= 0");
  require(c.synthetic_frames >= 1, "synthetic.frames must be >= 1");
  require(c.synthetic_joints >= 1, "synthetic.joints must be >= 1");
  require(c.synthetic_noise_std >= 0.0, "synthetic.noise_std must be >= 0");
  require(c.data_downsample >= 0, "data.downsample must be >= 0");
  require(c.model_hidden >= 1, "model.hidden must be >= 1");
  require(c.model_segments >= 1 && c.model_segments <= 6,
          "model.segments must be in [1, 6]");
  require(c.model_t_prime >= 1, "model.t_prime must be >= 1");
  require(c.model_noise_std >= 0.0, "model.noise_std must be >= 0");
  require(c.model_mask_fraction > 0.0 && c.model_mask_fraction < 1.0,
          "model.mask_fraction must be in (0, 1)");
  require(c.train_epochs >= 1, "train.epochs must be >= 1");
  require(c.train_pretrain_epochs >= 1, "train.pretrain_epochs must be >= 1");
  require(c.train_moving_epochs >= 0, "train.moving_epochs must be >= 0");
  require(c.train_omega >= 0.0, "train.omega must be >= 0");
  require(c.train_batch >= 1, "train.batch must be >= 1");
  require(c.train_probe_epochs >= 1, "train.probe_epochs must be >= 1");
  require(c.train_fraction > 0.0 && c.train_fraction <= 1.0,
          "train.fraction must be in (0, 1]");
  require(c.train_jobs >= 1, "train.jobs must be >= 1");

  auto valid_variant = [](const std::string& v) {
    return v == "temporal" || v == "spatial";
  };
  require(valid_variant(c.tasks_prediction_variant),
          "tasks.prediction_variant must be temporal or spatial");
  require(valid_variant(c.tasks_jigsaw_variant),
          "tasks.jigsaw_variant must be temporal or spatial");
  try {
    strategy_from_name(c.train_strategy);
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  try {
    const auto ops = parse_transform_ops(c.tasks_contrastive_ops);
    if (c.tasks_contrastive && ops.empty()) {
      errors.push_back("tasks.contrastive_ops must name at least one operator");
    }
    const bool wants_spatial =
        c.tasks_jigsaw_variant == "spatial" || c.tasks_prediction_variant == "spatial" ||
        std::any_of(ops.begin(), ops.end(), [](TransformOp op) {
          return op == TransformOp::kSpatialJigsaw || op == TransformOp::kSpatialMask;
        });
    if (wants_spatial && c.tasks_jigsaw_variant == "spatial" &&
        c.model_body_parts.empty()) {
      errors.push_back("spatial jigsaw requires model.body_parts");
    }
    if (std::any_of(ops.begin(), ops.end(),
                    [](TransformOp op) { return op == TransformOp::kSpatialJigsaw; }) &&
        c.model_body_parts.empty()) {
      errors.push_back("spatial_jigsaw operator requires model.body_parts");
    }
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  if (!c.model_body_parts.empty()) {
    try {
      const auto parts = parse_body_parts(c.model_body_parts);
      if (parts.size() != 5) {
        errors.push_back("model.body_parts must define exactly 5 groups");
      }
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  return errors;
}

TrainConfig make_train_config(const RunConfig& c) {
  TrainConfig tc;
  tc.model.hidden = c.model_hidden;
  tc.model.segments = c.model_segments;
  tc.transform.t_prime = c.model_t_prime;
  tc.transform.noise_std = c.model_noise_std;
  tc.transform.segments = c.model_segments;
  tc.transform.mask_fraction = c.model_mask_fraction;
  if (!c.model_body_parts.empty()) {
    tc.transform.body_parts = parse_body_parts(c.model_body_parts);
  }
  tc.tasks.prediction = c.tasks_prediction;
  tc.tasks.jigsaw = c.tasks_jigsaw;
  tc.tasks.contrastive = c.tasks_contrastive;
  tc.tasks.prediction_variant = c.tasks_prediction_variant == "spatial"
                                    ? TaskVariant::kSpatial
                                    : TaskVariant::kTemporal;
  tc.tasks.jigsaw_variant = c.tasks_jigsaw_variant == "spatial"
                                ? TaskVariant::kSpatial
                                : TaskVariant::kTemporal;
  tc.tasks.contrastive_ops = parse_transform_ops(c.tasks_contrastive_ops);
  tc.schedule.moving_epochs = c.train_moving_epochs;
  tc.schedule.omega = c.train_omega;
  tc.epochs = c.train_epochs;
  tc.pretrain_epochs = c.train_pretrain_epochs;
  tc.batch_size = c.train_batch;
  tc.probe_epochs = c.train_probe_epochs;
  return tc;
}

SyntheticConfig make_synthetic_config(const RunConfig& c) {
  SyntheticConfig sc;
  sc.num_classes = c.synthetic_classes;
  sc.sequences_per_class = c.synthetic_per_class + c.synthetic_test_per_class;
  sc.frames = c.synthetic_frames;
  sc.joints = c.synthetic_joints;
  sc.noise_std = c.synthetic_noise_std;
  sc.seed = static_cast<std::uint64_t>(c.synthetic_seed);
  return sc;
}

}  // namespace skelssl
