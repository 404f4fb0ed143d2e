#pragma once

#include <string>

#include "foram/config.hpp"

namespace foram {

// Per-command path arguments; unused members stay empty.
struct CliArgs {
  std::string out_dir = "out";
  std::string plates_dir;
  std::string truth_path;   // optional ground truth for labeling crops
  std::string data_dir;     // crops root for `split`
  std::string manifest_path;
  std::string head_checkpoint;
  std::string backbone_checkpoint;  // overrides config backbone.path
  std::string eval_split = "test";
};

// Exit codes: 0 success, 1 validation error, 2 runtime failure. The command
// functions throw; run_command translates.
void cmd_synth(const RunConfig& cfg, const CliArgs& args);
void cmd_extract(const RunConfig& cfg, const CliArgs& args);
void cmd_split(const RunConfig& cfg, const CliArgs& args);
void cmd_train(const RunConfig& cfg, const CliArgs& args);
void cmd_grid_search(const RunConfig& cfg, const CliArgs& args);
void cmd_finetune(const RunConfig& cfg, const CliArgs& args);
void cmd_evaluate(const RunConfig& cfg, const CliArgs& args);
void cmd_mc_dropout(const RunConfig& cfg, const CliArgs& args);

int run_command(const std::string& name, const RunConfig& cfg, const CliArgs& args);

}  // namespace foram
