#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zsd/commands.hpp"
#include "zsd/error.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "experiment config JSON");
  cmd->add_option("--data-dir", flags.data_dir, "override config data_dir");
  cmd->add_option("--out-dir", flags.out_dir, "override config out_dir");
}

struct Overrides {
  double lambda = -1.0, beta = -1.0, learning_rate = -1.0;
  long long epochs = -1, batch_size = -1, seed = -1, data_seed = -1;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--lambda", o.lambda, "unseen-alignment loss weight");
  cmd->add_option("--beta", o.beta, "region-contrastive loss weight");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--batch-size", o.batch_size, "proposals per minibatch");
  cmd->add_option("--learning-rate", o.learning_rate, "SGD learning rate");
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--data-seed", o.data_seed, "data generation seed");
}

zsd::ExperimentConfig resolve_config(const CommonFlags& flags, const Overrides& o) {
  zsd::ExperimentConfig config;
  if (!flags.config_path.empty())
    config = zsd::load_experiment_config(flags.config_path);
  if (!flags.data_dir.empty()) config.data_dir = flags.data_dir;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (o.lambda >= 0.0) config.model.lambda = o.lambda;
  if (o.beta >= 0.0) config.model.beta = o.beta;
  if (o.learning_rate >= 0.0) config.train.learning_rate = o.learning_rate;
  if (o.epochs >= 0) config.train.epochs = static_cast<std::size_t>(o.epochs);
  if (o.batch_size > 0) config.train.batch_size = static_cast<std::size_t>(o.batch_size);
  if (o.seed >= 0) config.train.seed = static_cast<std::uint64_t>(o.seed);
  if (o.data_seed >= 0) config.data.seed = static_cast<std::uint64_t>(o.data_seed);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot detection head on a synthetic region-proposal benchmark"};
  app.require_subcommand(1);

  CommonFlags flags;
  Overrides overrides;

  auto* gen = app.add_subcommand("gen-data", "generate embeddings and dataset splits");
  bool force = false;
  add_common(gen, flags);
  add_overrides(gen, overrides);
  gen->add_flag("--force", force, "overwrite existing data files");

  auto* train = app.add_subcommand("train", "train a model on the train split");
  add_common(train, flags);
  add_overrides(train, overrides);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint_path;
  std::string mode_name = "gzsd";
  add_common(eval, flags);
  add_overrides(eval, overrides);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--mode", mode_name, "seen | zsd | gzsd");

  auto* sweep = app.add_subcommand("sweep", "train/eval across lambda or beta values");
  std::string parameter;
  std::vector<double> values;
  add_common(sweep, flags);
  add_overrides(sweep, overrides);
  sweep->add_option("--parameter", parameter, "lambda | beta")->required();
  sweep->add_option("--values", values, "parameter values")->required()->delimiter(',');

  auto* inspect = app.add_subcommand("inspect-sim", "dump the similarity matrix as JSON");
  add_common(inspect, flags);
  add_overrides(inspect, overrides);

  CLI11_PARSE(app, argc, argv);

  try {
    const zsd::ExperimentConfig config = resolve_config(flags, overrides);
    if (gen->parsed()) {
      zsd::cmd_gen_data(config, force);
    } else if (train->parsed()) {
      zsd::cmd_train(config);
    } else if (eval->parsed()) {
      const auto report =
          zsd::cmd_eval(config, checkpoint_path, zsd::detect_mode_from_name(mode_name));
      std::cout << zsd::report_to_json(report).dump(2) << '\n';
    } else if (sweep->parsed()) {
      zsd::cmd_sweep(config, parameter, values);
    } else if (inspect->parsed()) {
      zsd::cmd_inspect_sim(config, std::cout);
    }
  } catch (const zsd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
