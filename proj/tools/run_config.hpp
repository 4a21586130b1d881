#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jointslu/config.hpp"
#include "jointslu/trainer.hpp"

namespace jointslu::cli {

// One flat configuration object for every subcommand. Values come from an
// optional JSON file (--config) and command-line flags of the same name;
// flags win. The effective result is echoed to <out_dir>/effective_config.json
// before any work happens.
struct RunConfig {
  // model
  int num_layers = 2;
  int hidden_size = 64;
  int num_heads = 4;
  int ffn_size = 256;
  int max_seq_len = 64;
  double dropout_keep = 0.9;
  double layernorm_epsilon = 1e-12;
  bool internal_dropout = false;

  // training
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t seed = 1;
  std::string mode = "joint";  // joint | intent-only | slot-only
  double mask_fraction = 0.15;

  // data
  std::vector<std::string> data_dirs;
  std::vector<std::string> languages;
  bool lowercase = false;

  // paths and evaluation switches
  std::string out_dir;
  std::string init_from;
  std::string archive;
  std::string input;
  std::string entities;
  std::string split = "test";           // train | valid | test
  std::string sentence_match = "span";  // span | raw
  bool per_language = false;
  std::string conll;

  ModelConfig model_config() const;
  TrainConfig train_config() const;
};

// Throws ConfigError on unknown keys or type mismatches.
void apply_config_file(RunConfig& config, const std::string& path);

std::string run_config_to_json(const RunConfig& config);

// Writes effective_config.json into out_dir (creating it).
void echo_effective_config(const RunConfig& config, const std::string& out_dir);

}  // namespace jointslu::cli
