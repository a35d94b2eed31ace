#pragma once

#include "run_config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace blendfuse::cli {

enum ExitCode : int { ok = 0, validation_failure = 2, config_failure = 3, numeric_failure = 4 };

// Entry point shared by main() and the tests; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

// Individual commands; each writes into cfg.output_dir.
void cmd_split(const RunConfig& cfg, std::ostream& log);
void cmd_encode_labels(const RunConfig& cfg, std::ostream& log);
void cmd_aggregate(const RunConfig& cfg, std::ostream& log);
void cmd_train_mlp(const RunConfig& cfg, std::ostream& log);
void cmd_fuse_evaluate(const RunConfig& cfg, std::ostream& log);
void cmd_sensitivity(const RunConfig& cfg, std::ostream& log);
void cmd_synth(const RunConfig& cfg, std::ostream& log);
// Returns false when any identity fails; the report is written either way.
bool cmd_verify_identities(const RunConfig& cfg, std::ostream& log);

} // namespace blendfuse::cli
