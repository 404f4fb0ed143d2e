#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "foram/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"foram - microfossil specimen extraction, classification and "
               "MC-dropout analysis"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  bool print_config = false;
  foram::CliArgs args;

  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--out", args.out_dir, "output directory (default: out)");
  app.add_flag("--print-config", print_config, "print the resolved config and exit");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic plate benchmark");
  CLI::App* extract =
      app.add_subcommand("extract", "detect specimens on plates and write 224x224 crops");
  extract->add_option("--plates", args.plates_dir, "directory of plate PNGs")->required();
  extract->add_option("--truth", args.truth_path,
                      "ground-truth JSONL for labeling crops (synth output)");
  CLI::App* split =
      app.add_subcommand("split", "build a stratified 80/10/10 manifest from a crops tree");
  split->add_option("--data", args.data_dir, "crops root (<class>/*.png)")->required();
  CLI::App* train = app.add_subcommand("train", "train the classification head");
  CLI::App* grid = app.add_subcommand("grid-search", "rank hyperparameter configurations");
  CLI::App* finetune =
      app.add_subcommand("finetune", "unfreeze the last builtin blocks and fine-tune");
  CLI::App* evaluate = app.add_subcommand("evaluate", "accuracy and confusion matrix");
  CLI::App* mc = app.add_subcommand("mc-dropout", "Monte Carlo dropout analysis report");

  for (CLI::App* cmd : {train, grid, finetune, evaluate, mc})
    cmd->add_option("--manifest", args.manifest_path, "manifest JSON")->required();
  for (CLI::App* cmd : {finetune, evaluate, mc})
    cmd->add_option("--head", args.head_checkpoint, "classifier head checkpoint")->required();
  for (CLI::App* cmd : {train, grid, finetune, evaluate, mc})
    cmd->add_option("--backbone", args.backbone_checkpoint,
                    "backbone checkpoint or model file (overrides backbone.path)");
  for (CLI::App* cmd : {evaluate, mc})
    cmd->add_option("--split", args.eval_split, "split to evaluate (default: test)");

  CLI11_PARSE(app, argc, argv);

  foram::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = foram::load_config_file(config_path);
    if (seed_override) cfg.seed = *seed_override;
  } catch (const foram::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  if (print_config) {
    std::printf("%s\n", cfg.to_json().dump(2).c_str());
    return 0;
  }

  const auto subcommands = app.get_subcommands();
  if (subcommands.empty()) {
    std::fprintf(stderr, "error: no command given (see --help)\n");
    return 1;
  }
  return foram::run_command(subcommands.front()->get_name(), cfg, args);
}
