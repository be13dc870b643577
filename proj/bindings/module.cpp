// Python bindings for the skelssl core: data generation and I/O, the pretext
// transforms, model forward passes, losses, training strategies and probes.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "skelssl/evaluation.hpp"
#include "skelssl/losses.hpp"
#include "skelssl/model.hpp"
#include "skelssl/skeleton.hpp"
#include "skelssl/training.hpp"
#include "skelssl/transforms.hpp"

namespace py = pybind11;
using namespace skelssl;

namespace {

TaskConfig tasks_from_code(const std::string& code) {
  TaskConfig base;
  return task_subset_from_code(code, base);
}

py::dict row_to_dict(const EpochRow& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  d["L_m"] = r.l_m;
  d["L_j"] = r.l_j;
  d["L_c"] = r.l_c;
  d["L_self"] = r.l_self;
  d["L_cls"] = r.l_cls;
  d["theta"] = r.theta;
  d["lr"] = r.lr;
  d["train_acc"] = r.train_acc;
  d["test_acc"] = r.test_acc;
  return d;
}

}  // namespace

PYBIND11_MODULE(skelssl, m) {
  m.doc() = "Multi-task self-supervised learning for skeleton sequences";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<SkeletonSequence>(m, "SkeletonSequence")
      .def_readonly("id", &SkeletonSequence::id)
      .def_readonly("joint_count", &SkeletonSequence::joint_count)
      .def_property_readonly(
          "label",
          [](const SkeletonSequence& s) -> py::object {
            if (s.label) return py::int_(*s.label);
            return py::none();
          })
      .def_readonly("frames", &SkeletonSequence::frames)
      .def_property_readonly("length", &SkeletonSequence::length);

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def_property_readonly("joint_count", &Dataset::joint_count)
      .def_property_readonly("split_tag", &Dataset::split_tag)
      .def("sequence", &Dataset::sequence, py::return_value_policy::reference_internal)
      .def("read_count", &Dataset::read_count);

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("num_classes", &SyntheticConfig::num_classes)
      .def_readwrite("sequences_per_class", &SyntheticConfig::sequences_per_class)
      .def_readwrite("frames", &SyntheticConfig::frames)
      .def_readwrite("joints", &SyntheticConfig::joints)
      .def_readwrite("noise_std", &SyntheticConfig::noise_std)
      .def_readwrite("seed", &SyntheticConfig::seed);

  m.def("generate_synthetic", &generate_synthetic, py::arg("config"));
  m.def("synthetic_template", &synthetic_template, py::arg("config"),
        py::arg("action_class"));
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"));
  m.def("downsample",
        static_cast<Dataset (*)(const Dataset&, int)>(&downsample), py::arg("dataset"),
        py::arg("target_len"));
  m.def("split_labeled",
        [](const Dataset& ds, double fraction, std::uint64_t seed) {
          return split_labeled(ds, SplitSpec{fraction, seed});
        },
        py::arg("dataset"), py::arg("fraction"), py::arg("seed"));
  m.def("holdout_per_class", &holdout_per_class, py::arg("dataset"),
        py::arg("test_per_class"));

  // transforms
  py::class_<MaskedSample>(m, "MaskedSample")
      .def_readonly("noisy_prefix", &MaskedSample::noisy_prefix)
      .def_readonly("target_suffix", &MaskedSample::target_suffix)
      .def_readonly("t_prime", &MaskedSample::t_prime);
  py::class_<JigsawSample>(m, "JigsawSample")
      .def_readonly("shuffled", &JigsawSample::shuffled)
      .def_readonly("permutation_id", &JigsawSample::permutation_id)
      .def_readonly("segments", &JigsawSample::segments);

  m.def("mask_and_noise",
        static_cast<MaskedSample (*)(const Mat&, int, double, std::uint64_t)>(
            &mask_and_noise),
        py::arg("frames"), py::arg("t_prime"), py::arg("noise_std"), py::arg("seed"));
  m.def("temporal_jigsaw",
        static_cast<JigsawSample (*)(const Mat&, int, std::uint64_t)>(&temporal_jigsaw),
        py::arg("frames"), py::arg("segments"), py::arg("seed"));
  m.def("undo_temporal_jigsaw", &undo_temporal_jigsaw, py::arg("sample"));
  m.def("enumerate_permutations", &enumerate_permutations, py::arg("segments"));

  // model
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("joints", &ModelConfig::joints)
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("segments", &ModelConfig::segments)
      .def_readwrite("jigsaw_classes", &ModelConfig::jigsaw_classes)
      .def_readwrite("num_classes", &ModelConfig::num_classes)
      .def_property_readonly("feature_dim", &ModelConfig::feature_dim);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("config", &ModelParams::config)
      .def("entries", [](const ModelParams& p) {
        py::dict d;
        for (const auto& [name, mat] : p.entries()) d[name.c_str()] = *mat;
        return d;
      });

  m.def("init_params", &init_params, py::arg("config"), py::arg("seed"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("params"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def("encode",
        [](const Mat& seq, const ModelParams& p) {
          EncodedValues enc = encode_values(seq, p);
          return py::make_tuple(enc.per_frame, enc.pooled);
        },
        py::arg("frames"), py::arg("params"),
        "Returns (per_frame TxF, pooled 1xF) features.");
  m.def("predict_future", &predict_future_values, py::arg("noisy_prefix"),
        py::arg("suffix_len"), py::arg("params"));
  m.def("jigsaw_logits", &jigsaw_logits_values, py::arg("frames"), py::arg("params"));
  m.def("project", &project_values, py::arg("frames"), py::arg("params"));
  m.def("classify",
        [](const Mat& seq, const ModelParams& p, const std::string& mode) {
          return classify_values(seq, p,
                                 mode == "linear_probe" ? ClassifyMode::kLinearProbe
                                                        : ClassifyMode::kFull);
        },
        py::arg("frames"), py::arg("params"), py::arg("mode") = "full");

  // losses (value forms)
  m.def("motion_loss", &motion_loss_value, py::arg("predicted"), py::arg("truth"));
  m.def("jigsaw_loss", &jigsaw_loss_value, py::arg("logits"), py::arg("targets"));
  m.def("contrastive_loss", &contrastive_loss_value, py::arg("features"),
        py::arg("group_size"));
  m.def("classification_loss", &classification_loss_value, py::arg("logits"),
        py::arg("labels"));
  m.def("combine_moving",
        static_cast<double (*)(double, double, double)>(&combine_moving),
        py::arg("l_cls"), py::arg("l_self"), py::arg("theta"));
  m.def("combine_joint",
        static_cast<double (*)(double, double, double)>(&combine_joint),
        py::arg("l_cls"), py::arg("l_self"), py::arg("omega"));

  // training
  py::class_<Schedule>(m, "Schedule")
      .def(py::init<>())
      .def_readwrite("base_lr", &Schedule::base_lr)
      .def_readwrite("floor_lr", &Schedule::floor_lr)
      .def_readwrite("decay", &Schedule::decay)
      .def_readwrite("decay_every", &Schedule::decay_every)
      .def_readwrite("moving_epochs", &Schedule::moving_epochs)
      .def_readwrite("omega", &Schedule::omega)
      .def("lr", &Schedule::lr)
      .def("theta", &Schedule::theta);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("model", &TrainConfig::model)
      .def_readwrite("schedule", &TrainConfig::schedule)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("pretrain_epochs", &TrainConfig::pretrain_epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("probe_epochs", &TrainConfig::probe_epochs)
      .def_property(
          "t_prime", [](const TrainConfig& c) { return c.transform.t_prime; },
          [](TrainConfig& c, int v) { c.transform.t_prime = v; })
      .def_property(
          "transform_noise_std",
          [](const TrainConfig& c) { return c.transform.noise_std; },
          [](TrainConfig& c, double v) { c.transform.noise_std = v; })
      .def_property(
          "segments", [](const TrainConfig& c) { return c.transform.segments; },
          [](TrainConfig& c, int v) {
            c.transform.segments = v;
            c.model.segments = v;
          })
      .def_property(
          "tasks",
          [](const TrainConfig& c) { return task_label(c.tasks); },
          [](TrainConfig& c, const std::string& code) {
            c.tasks = task_subset_from_code(code, c.tasks);
          });

  py::class_<TrainReport>(m, "TrainReport")
      .def("__len__", [](const TrainReport& r) { return r.rows.size(); })
      .def("row",
           [](const TrainReport& r, std::size_t i) { return row_to_dict(r.rows.at(i)); })
      .def("rows",
           [](const TrainReport& r) {
             py::list out;
             for (const EpochRow& row : r.rows) out.append(row_to_dict(row));
             return out;
           })
      .def("write_csv", &TrainReport::write_csv)
      .def("to_csv", &TrainReport::to_csv);

  m.def("pretrain_self_supervised", &pretrain_self_supervised, py::arg("data"),
        py::arg("config"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("train_supervised",
        [](const Dataset& train, const std::string& strategy, const ModelParams* init,
           const TrainConfig& config, std::uint64_t seed, const Dataset* test) {
          py::gil_scoped_release release;
          return train_supervised(train, strategy_from_name(strategy), init, config,
                                  seed, test);
        },
        py::arg("train"), py::arg("strategy"), py::arg("init") = nullptr,
        py::arg("config") = TrainConfig{}, py::arg("seed") = 0,
        py::arg("test") = nullptr);
  m.def("train_semi_supervised", &train_semi_supervised, py::arg("labeled"),
        py::arg("unlabeled"), py::arg("config"), py::arg("seed"),
        py::arg("test") = nullptr, py::call_guard<py::gil_scoped_release>());
  m.def("transfer_learning", &transfer_learning, py::arg("source"), py::arg("target"),
        py::arg("config"), py::arg("seed"), py::arg("test") = nullptr,
        py::call_guard<py::gil_scoped_release>());

  // evaluation
  py::class_<ProbeResult>(m, "ProbeResult")
      .def_readonly("accuracy", &ProbeResult::accuracy)
      .def_readonly("feature_dim", &ProbeResult::feature_dim)
      .def_readonly("encoder_source", &ProbeResult::encoder_source);

  m.def("accuracy", &accuracy, py::arg("logits"), py::arg("labels"));
  m.def("dataset_accuracy",
        [](const Dataset& ds, const ModelParams& p, const std::string& mode) {
          return dataset_accuracy(ds, p,
                                  mode == "linear_probe" ? ClassifyMode::kLinearProbe
                                                         : ClassifyMode::kFull);
        },
        py::arg("data"), py::arg("params"), py::arg("mode") = "full");
  m.def("linear_probe", &linear_probe, py::arg("encoder"), py::arg("train"),
        py::arg("test"), py::arg("config"), py::arg("seed"),
        py::arg("encoder_source") = "file",
        py::call_guard<py::gil_scoped_release>());
  m.def("max_upward_jump", &max_upward_jump, py::arg("report"),
        py::arg("transition_row"));
  m.def("tasks_from_code", &tasks_from_code, py::arg("code"));
}
