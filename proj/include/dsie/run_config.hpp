#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dsie/model.hpp"

namespace dsie {

// Plain "key = value" configuration. Lines starting with '#' are comments.
// Unknown keys are rejected; absent keys keep TrainConfig defaults.
struct RunConfig {
  TrainConfig train;
  std::string corpus_dir;
  std::string checkpoint_path;
  std::string report_path;
  std::string log_path;
};

void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

// Round-trips through parse_train_config exactly.
std::string format_train_config(const TrainConfig& config);
TrainConfig parse_train_config(const std::string& text);

}  // namespace dsie
