#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "motionlab/config.hpp"
#include "motionlab/error.hpp"
#include "motionlab/harness.hpp"

namespace ml = motionlab;

namespace {

// Keeps the config's seed unless --seed was given.
ml::RunConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  ml::RunConfig cfg = ml::parse_config(path);
  if (seed) cfg.training.seed = *seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motionlab: graph-attention human motion prediction"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir = "run", resume_path, split = "val", data_path, input_path,
                                            output_path, format = "json";
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "train a model from a run config");
  train->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "output directory for train.log and checkpoints");
  train->add_option("--seed", seed, "override training.seed");
  train->add_option("--resume", resume_path, "continue from this checkpoint")->check(CLI::ExistingFile);
  train->add_flag("--quiet", quiet, "do not echo the log to stdout");

  auto* eval = app.add_subcommand("eval", "MPJPE and Jitter of a checkpoint against the zero-velocity baseline");
  eval->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}));
  eval->add_option("--data", data_path, "evaluate on this sequence CSV or index JSON instead of the config's data");
  eval->add_option("--seed", seed, "override training.seed (changes the split)");
  eval->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));

  auto* pred = app.add_subcommand("predict", "predict the frames that follow a sequence");
  pred->add_option("--checkpoint", checkpoint_path)->required()->check(CLI::ExistingFile);
  pred->add_option("--input", input_path, "sequence CSV (with its .json manifest)")->required()->check(CLI::ExistingFile);
  pred->add_option("--output", output_path, "where to write the predicted sequence CSV")->required();

  std::uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients on a toy model");
  gradcheck->add_option("--seed", gc_seed);

  std::optional<std::string> params_config;
  auto* params = app.add_subcommand("params", "parameter count of a model config");
  params->add_option("--config", params_config, "run config; the default-sized model when omitted")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ml::TrainOptions opts;
      opts.out_dir = out_dir;
      if (!resume_path.empty()) opts.resume = resume_path;
      if (!quiet) opts.echo = &std::cout;
      const auto result = ml::cmd_train(load_config(config_path, seed), opts);
      std::cout << "checkpoint " << result.checkpoint.string() << '\n';
    } else if (*eval) {
      std::optional<std::filesystem::path> data;
      if (!data_path.empty()) data = data_path;
      const auto result =
          ml::cmd_eval(load_config(config_path, seed), checkpoint_path, ml::eval_split_from_string(split), data);
      std::cout << (format == "json" ? result.json() + "\n" : result.table());
    } else if (*pred) {
      ml::cmd_predict(checkpoint_path, input_path, output_path);
    } else if (*gradcheck) {
      const auto report = ml::cmd_gradcheck(gc_seed);
      std::cout << report.text();
      return report.passed() ? 0 : 1;
    } else if (*params) {
      const ml::ModelConfig mc = params_config ? ml::parse_config(*params_config).model : ml::ModelConfig{};
      const auto model = ml::init_model(mc, 0);
      std::cout << "param_count " << ml::param_count(model) << '\n';
      std::cout << "analytic_param_count " << ml::analytic_param_count(mc) << '\n';
    }
  } catch (const ml::Error& e) {
    std::cerr << "error: " << ml::to_string(e.kind()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
