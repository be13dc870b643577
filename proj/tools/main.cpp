// skelssl command-line front end: synthetic data generation, self-supervised
// pretraining, supervised training strategies, linear probes, ablation sweeps,
// semi-supervised and transfer runs.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "skelssl/config.hpp"
#include "skelssl/evaluation.hpp"
#include "skelssl/model.hpp"
#include "skelssl/rng.hpp"
#include "skelssl/skeleton.hpp"
#include "skelssl/training.hpp"

namespace {

using namespace skelssl;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data;
  std::string test;
  std::string out;
  std::string init;
  std::string strategy;
  long seed = -2;  // -2 = not given on the command line
  double fraction = -1.0;
  std::string subsets;
  std::string source;
  std::string target;
  int jobs = 0;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file");
  cmd->add_option("-D,--set", args.overrides,
                  "override a config entry, e.g. -D train.epochs=40");
  cmd->add_option("--out", args.out, "output directory (or file for gen-data)");
  cmd->add_option("--seed", args.seed, "seed for this run (train.seed)");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig config;
  std::vector<std::string> errors;
  if (!args.config_path.empty()) load_config_file(args.config_path, config, errors);
  for (const std::string& assignment : args.overrides) {
    apply_override(assignment, config, errors);
  }
  if (!args.data.empty()) config.data_train = args.data;
  if (!args.test.empty()) config.data_test = args.test;
  if (!args.out.empty()) config.output_dir = args.out;
  if (!args.init.empty()) config.train_init = args.init;
  if (!args.strategy.empty()) config.train_strategy = args.strategy;
  if (args.seed != -2) config.train_seed = args.seed;
  if (args.fraction >= 0.0) config.train_fraction = args.fraction;
  if (!args.subsets.empty()) config.sweep_subsets = args.subsets;
  if (args.jobs > 0) config.train_jobs = args.jobs;

  for (const std::string& problem : validate(config)) errors.push_back(problem);
  if (!errors.empty()) {
    std::string all = "invalid configuration:";
    for (const std::string& e : errors) all += "\n  " + e;
    throw ConfigError(all);
  }
  return config;
}

void require_seed(const RunConfig& config) {
  if (!config.has_seed()) {
    throw ConfigError("train.seed must be set for training commands (--seed)");
  }
}

Dataset load_prepared(const RunConfig& config, const std::string& path) {
  if (path.empty()) throw ConfigError("no dataset path given (data.train / --data)");
  Dataset ds = load_dataset(path);
  if (config.data_downsample > 0) ds = downsample(ds, config.data_downsample);
  if (config.data_center) ds = center_sequences(ds);
  return ds;
}

std::string out_file(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.output_dir);
  return (std::filesystem::path(config.output_dir) / name).string();
}

std::uint64_t run_seed(const RunConfig& config) {
  return static_cast<std::uint64_t>(config.train_seed);
}

int cmd_gen_data(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  const SyntheticConfig synth = make_synthetic_config(config);
  Dataset ds = generate_synthetic(synth);

  std::string path = args.out.empty() ? out_file(config, "data.skel") : args.out;
  if (config.synthetic_test_per_class > 0) {
    auto [train, test] = holdout_per_class(ds, config.synthetic_test_per_class);
    std::filesystem::path p(path);
    const std::string test_path =
        (p.parent_path() / (p.stem().string() + ".test" + p.extension().string()))
            .string();
    save_dataset(path, train);
    save_dataset(test_path, test);
    std::printf("wrote %s (%zu sequences) and %s (%zu sequences)\n", path.c_str(),
                train.size(), test_path.c_str(), test.size());
  } else {
    save_dataset(path, ds);
    std::printf("wrote %s: %zu sequences, %d classes, J=%d, T=%d\n", path.c_str(),
                ds.size(), ds.num_classes(), ds.joint_count(), synth.frames);
  }
  return 0;
}

int cmd_pretrain(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  require_seed(config);
  Dataset data = load_prepared(config, config.data_train);
  auto [params, report] =
      pretrain_self_supervised(data, make_train_config(config), run_seed(config));
  const std::string ckpt = out_file(config, "pretrain.ckpt");
  save_checkpoint(ckpt, params);
  report.write_csv(out_file(config, "pretrain.csv"));
  std::printf("pretrained %d epochs on %zu sequences; final L_self %.6g\n",
              config.train_pretrain_epochs, data.size(), report.rows.back().l_self);
  std::printf("checkpoint: %s\n", ckpt.c_str());
  return 0;
}

int cmd_train(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  require_seed(config);
  Dataset data = load_prepared(config, config.data_train);
  std::optional<Dataset> test;
  if (!config.data_test.empty()) test = load_prepared(config, config.data_test);

  const Strategy strategy = strategy_from_name(config.train_strategy);
  std::optional<ModelParams> init;
  if (!config.train_init.empty()) init = load_checkpoint(config.train_init);

  auto [params, report] = train_supervised(
      data, strategy, init ? &*init : nullptr, make_train_config(config),
      run_seed(config), test ? &*test : nullptr);
  const std::string ckpt = out_file(config, "train.ckpt");
  save_checkpoint(ckpt, params);
  report.write_csv(out_file(config, "train.csv"));
  const EpochRow& last = report.rows.back();
  std::printf("strategy=%s epochs=%d train_acc=%.4f test_acc=%.4f\n",
              strategy_name(strategy).c_str(), config.train_epochs, last.train_acc,
              last.test_acc);
  return 0;
}

int cmd_probe(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  require_seed(config);
  Dataset train = load_prepared(config, config.data_train);
  Dataset test = load_prepared(config, config.data_test);

  const TrainConfig tc = make_train_config(config);
  ModelParams encoder;
  std::string source;
  if (config.train_init.empty()) {
    encoder = init_params(resolve_model_config(tc, train), run_seed(config));
    source = "rand";
  } else {
    encoder = load_checkpoint(config.train_init);
    source = "file";
  }
  ProbeResult result = linear_probe(encoder, train, test, tc, run_seed(config), source);
  std::printf("probe,%s,%.6f\n", result.encoder_source.c_str(), result.accuracy);
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  require_seed(config);
  Dataset train = load_prepared(config, config.data_train);
  Dataset test = load_prepared(config, config.data_test);

  const TrainConfig tc = make_train_config(config);
  std::vector<TaskConfig> combos;
  std::stringstream subsets(config.sweep_subsets);
  std::string code;
  while (std::getline(subsets, code, ',')) {
    if (!code.empty()) combos.push_back(task_subset_from_code(code, tc.tasks));
  }
  AblationGrid grid =
      ablation_sweep(train, test, combos, tc, run_seed(config), config.train_jobs);
  grid.write_csv(out_file(config, "sweep.csv"));
  for (const AblationCell& cell : grid.cells) {
    std::printf("%s,%.6f\n", cell.label.c_str(), cell.accuracy);
  }
  return 0;
}

int cmd_semi(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  require_seed(config);
  Dataset data = load_prepared(config, config.data_train);
  std::optional<Dataset> test;
  if (!config.data_test.empty()) test = load_prepared(config, config.data_test);

  SplitSpec spec;
  spec.labeled_fraction = config.train_fraction;
  spec.seed = mix_seed(run_seed(config), 0x73706c6974ULL);  // "split"
  auto [labeled, unlabeled] = split_labeled(data, spec);

  auto [params, report] =
      train_semi_supervised(labeled, unlabeled, make_train_config(config),
                            run_seed(config), test ? &*test : nullptr);
  save_checkpoint(out_file(config, "semi.ckpt"), params);
  report.write_csv(out_file(config, "semi.csv"));
  std::printf("semi: %zu labeled / %zu unlabeled; final test_acc=%.4f\n",
              labeled.size(), unlabeled.size(), report.rows.back().test_acc);
  return 0;
}

int cmd_transfer(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  require_seed(config);
  if (args.source.empty() || args.target.empty()) {
    throw ConfigError("transfer requires --source and --target dataset paths");
  }
  Dataset source = load_prepared(config, args.source);
  Dataset target = load_prepared(config, args.target);
  std::optional<Dataset> test;
  if (!config.data_test.empty()) test = load_prepared(config, config.data_test);

  auto [params, report] = transfer_learning(
      source, target, make_train_config(config), run_seed(config),
      test ? &*test : nullptr);
  save_checkpoint(out_file(config, "transfer.ckpt"), params);
  report.write_csv(out_file(config, "transfer.csv"));
  std::printf("transfer: pretrained on %zu, finetuned on %zu sequences\n",
              source.size(), target.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task self-supervised learning for skeleton sequences"};
  app.require_subcommand(1);

  CommonArgs args;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset file");
  add_common_options(gen, args);

  CLI::App* pretrain =
      app.add_subcommand("pretrain", "self-supervised pretraining of the encoder");
  add_common_options(pretrain, args);
  pretrain->add_option("--data", args.data, "training dataset (SKEL1)");

  CLI::App* train = app.add_subcommand("train", "supervised training strategies");
  add_common_options(train, args);
  train->add_option("--data", args.data, "labeled training dataset");
  train->add_option("--test", args.test, "test dataset for per-epoch accuracy");
  train->add_option("--strategy", args.strategy,
                    "rand | pretrain | moving | jointly | finetune");
  train->add_option("--init", args.init, "pretrained checkpoint");

  CLI::App* probe =
      app.add_subcommand("probe", "linear probe on a frozen encoder");
  add_common_options(probe, args);
  probe->add_option("--data", args.data, "probe training dataset");
  probe->add_option("--test", args.test, "probe evaluation dataset");
  probe->add_option("--init", args.init, "encoder checkpoint (omit for random)");

  CLI::App* sweep = app.add_subcommand("sweep", "task-combination ablation sweep");
  add_common_options(sweep, args);
  sweep->add_option("--data", args.data, "training dataset");
  sweep->add_option("--test", args.test, "test dataset");
  sweep->add_option("--subsets", args.subsets, "comma list of m/j/c codes");
  sweep->add_option("--jobs", args.jobs, "parallel cells");

  CLI::App* semi = app.add_subcommand("semi", "semi-supervised two-phase training");
  add_common_options(semi, args);
  semi->add_option("--data", args.data, "full training dataset to split");
  semi->add_option("--test", args.test, "test dataset");
  semi->add_option("--fraction", args.fraction, "labeled fraction in (0, 1]");

  CLI::App* transfer =
      app.add_subcommand("transfer", "pretrain on a source, finetune on a target");
  add_common_options(transfer, args);
  transfer->add_option("--source", args.source, "source dataset for pretraining");
  transfer->add_option("--target", args.target, "target dataset for finetuning");
  transfer->add_option("--test", args.test, "target test dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen_data(args);
    if (pretrain->parsed()) return cmd_pretrain(args);
    if (train->parsed()) return cmd_train(args);
    if (probe->parsed()) return cmd_probe(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (semi->parsed()) return cmd_semi(args);
    if (transfer->parsed()) return cmd_transfer(args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
