#pragma once

#include "crsynth/config.hpp"

namespace crsynth::cli {

// Single-file run configuration with a fixed, versioned key schema. Unknown
// keys are rejected so a misspelled ablation flag cannot silently pass.
struct RunConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  LossWeights loss;
  TrainConfig train;
  std::string manifest;
  std::string run_dir = "runs/default";
  int64_t tile_size = 64;
  std::string raw_text;  // verbatim file contents, snapshotted into runs

  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Default configuration rendered as a config file template.
std::string default_run_config_text();

// Applies the CRSYNTH_RUN_ROOT override to a relative run_dir.
std::string resolve_run_dir(const std::string& run_dir);

}  // namespace crsynth::cli
