#include "run_config.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "jointslu/errors.hpp"

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace jointslu::cli {

namespace {

ordered_json to_json(const RunConfig& c) {
  ordered_json doc;
  doc["num_layers"] = c.num_layers;
  doc["hidden_size"] = c.hidden_size;
  doc["num_heads"] = c.num_heads;
  doc["ffn_size"] = c.ffn_size;
  doc["max_seq_len"] = c.max_seq_len;
  doc["dropout_keep"] = c.dropout_keep;
  doc["layernorm_epsilon"] = c.layernorm_epsilon;
  doc["internal_dropout"] = c.internal_dropout;
  doc["epochs"] = c.epochs;
  doc["batch_size"] = c.batch_size;
  doc["learning_rate"] = c.learning_rate;
  doc["adam_beta1"] = c.adam_beta1;
  doc["adam_beta2"] = c.adam_beta2;
  doc["adam_epsilon"] = c.adam_epsilon;
  doc["weight_decay"] = c.weight_decay;
  doc["seed"] = c.seed;
  doc["mode"] = c.mode;
  doc["mask_fraction"] = c.mask_fraction;
  doc["data_dirs"] = c.data_dirs;
  doc["languages"] = c.languages;
  doc["lowercase"] = c.lowercase;
  doc["out_dir"] = c.out_dir;
  doc["init_from"] = c.init_from;
  doc["archive"] = c.archive;
  doc["input"] = c.input;
  doc["entities"] = c.entities;
  doc["split"] = c.split;
  doc["sentence_match"] = c.sentence_match;
  doc["per_language"] = c.per_language;
  doc["conll"] = c.conll;
  return doc;
}

template <typename T>
void read_field(const ordered_json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

ModelConfig RunConfig::model_config() const {
  ModelConfig mc;
  mc.num_layers = num_layers;
  mc.hidden_size = hidden_size;
  mc.num_heads = num_heads;
  mc.ffn_size = ffn_size;
  mc.max_seq_len = max_seq_len;
  mc.dropout_keep = dropout_keep;
  mc.layernorm_epsilon = layernorm_epsilon;
  mc.internal_dropout = internal_dropout;
  return mc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.learning_rate = learning_rate;
  tc.adam_beta1 = adam_beta1;
  tc.adam_beta2 = adam_beta2;
  tc.adam_epsilon = adam_epsilon;
  tc.weight_decay = weight_decay;
  tc.seed = seed;
  tc.mode = train_mode_from_name(mode);
  return tc;
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": config must be a JSON object");

  const ordered_json known = to_json(config);
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!known.contains(key)) throw ConfigError(path + ": unknown config key '" + key + "'");
  }
  read_field(doc, "num_layers", config.num_layers);
  read_field(doc, "hidden_size", config.hidden_size);
  read_field(doc, "num_heads", config.num_heads);
  read_field(doc, "ffn_size", config.ffn_size);
  read_field(doc, "max_seq_len", config.max_seq_len);
  read_field(doc, "dropout_keep", config.dropout_keep);
  read_field(doc, "layernorm_epsilon", config.layernorm_epsilon);
  read_field(doc, "internal_dropout", config.internal_dropout);
  read_field(doc, "epochs", config.epochs);
  read_field(doc, "batch_size", config.batch_size);
  read_field(doc, "learning_rate", config.learning_rate);
  read_field(doc, "adam_beta1", config.adam_beta1);
  read_field(doc, "adam_beta2", config.adam_beta2);
  read_field(doc, "adam_epsilon", config.adam_epsilon);
  read_field(doc, "weight_decay", config.weight_decay);
  read_field(doc, "seed", config.seed);
  read_field(doc, "mode", config.mode);
  read_field(doc, "mask_fraction", config.mask_fraction);
  read_field(doc, "data_dirs", config.data_dirs);
  read_field(doc, "languages", config.languages);
  read_field(doc, "lowercase", config.lowercase);
  read_field(doc, "out_dir", config.out_dir);
  read_field(doc, "init_from", config.init_from);
  read_field(doc, "archive", config.archive);
  read_field(doc, "input", config.input);
  read_field(doc, "entities", config.entities);
  read_field(doc, "split", config.split);
  read_field(doc, "sentence_match", config.sentence_match);
  read_field(doc, "per_language", config.per_language);
  read_field(doc, "conll", config.conll);
}

std::string run_config_to_json(const RunConfig& config) { return to_json(config).dump(2); }

void echo_effective_config(const RunConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "effective_config.json");
  if (!out) throw DataError("cannot write effective_config.json under " + out_dir);
  out << run_config_to_json(config) << '\n';
}

}  // namespace jointslu::cli
