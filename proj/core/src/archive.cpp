#include "jointslu/archive.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointslu/errors.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace jointslu {

namespace {

static_assert(std::endian::native == std::endian::little,
              "weights.bin assumes a little-endian host");

ordered_json config_to_json(const ModelConfig& config, const Vocabulary& vocab,
                            const LabelMaps& labels, const std::vector<TensorRef>& refs) {
  ordered_json doc;
  doc["num_layers"] = config.num_layers;
  doc["hidden_size"] = config.hidden_size;
  doc["num_heads"] = config.num_heads;
  doc["ffn_size"] = config.ffn_size;
  doc["vocab_size"] = config.vocab_size;
  doc["max_seq_len"] = config.max_seq_len;
  doc["dropout_keep"] = config.dropout_keep;
  doc["layernorm_epsilon"] = config.layernorm_epsilon;
  doc["internal_dropout"] = config.internal_dropout;
  doc["lowercase"] = vocab.lowercase;
  doc["intents"] = labels.intents;
  doc["slot_tags"] = labels.slot_tags;
  doc["tokens"] = vocab.id_to_token;
  ordered_json manifest = ordered_json::array();
  for (const TensorRef& ref : refs) {
    ordered_json entry;
    entry["name"] = ref.name;
    entry["shape"] = ref.shape;
    manifest.push_back(std::move(entry));
  }
  doc["manifest"] = std::move(manifest);
  return doc;
}

void write_weights(const std::vector<TensorRef>& refs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  std::vector<float> buffer;
  for (const TensorRef& ref : refs) {
    buffer.resize(static_cast<std::size_t>(ref.size));
    for (Eigen::Index i = 0; i < ref.size; ++i) {
      buffer[static_cast<std::size_t>(i)] = static_cast<float>(ref.data[i]);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing " + path);
}

void read_weights(const std::vector<TensorRef>& refs, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<float> buffer;
  for (const TensorRef& ref : refs) {
    buffer.resize(static_cast<std::size_t>(ref.size));
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size() * sizeof(float))) {
      throw ConfigError("weights.bin is shorter than the manifest declares");
    }
    for (Eigen::Index i = 0; i < ref.size; ++i) {
      ref.data[i] = static_cast<double>(buffer[static_cast<std::size_t>(i)]);
    }
  }
  char extra;
  if (in.read(&extra, 1)) throw ConfigError("weights.bin is longer than the manifest declares");
}

void check_manifest(const ordered_json& manifest, const std::vector<TensorRef>& refs,
                    const std::string& directory) {
  if (!manifest.is_array() || manifest.size() != refs.size()) {
    throw ConfigError(directory + ": manifest lists " + std::to_string(manifest.size()) +
                      " tensors, expected " + std::to_string(refs.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::string name = manifest[i].at("name").get<std::string>();
    const auto shape = manifest[i].at("shape").get<std::vector<Eigen::Index>>();
    if (name != refs[i].name || shape != refs[i].shape) {
      throw ConfigError(directory + ": manifest entry " + std::to_string(i) + " is '" + name +
                        "', expected '" + refs[i].name + "' with matching shape");
    }
  }
}

ordered_json load_config_json(const std::string& directory) {
  const std::string path = (fs::path(directory) / "config.json").string();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ModelConfig config_from_json(const ordered_json& doc) {
  ModelConfig config;
  config.num_layers = doc.at("num_layers").get<int>();
  config.hidden_size = doc.at("hidden_size").get<int>();
  config.num_heads = doc.at("num_heads").get<int>();
  config.ffn_size = doc.at("ffn_size").get<int>();
  config.vocab_size = doc.at("vocab_size").get<int>();
  config.max_seq_len = doc.at("max_seq_len").get<int>();
  config.dropout_keep = doc.at("dropout_keep").get<double>();
  config.layernorm_epsilon = doc.at("layernorm_epsilon").get<double>();
  config.internal_dropout = doc.at("internal_dropout").get<bool>();
  config.validate();
  return config;
}

Vocabulary vocab_from_json(const ordered_json& doc) {
  auto tokens = doc.at("tokens").get<std::vector<std::string>>();
  if (tokens.size() < 4) throw ConfigError("archive token list misses the reserved ids");
  tokens.erase(tokens.begin(), tokens.begin() + 4);
  return Vocabulary::from_tokens(std::move(tokens), doc.at("lowercase").get<bool>());
}

}  // namespace

void save_archive(const ModelArchive& archive, const std::string& directory) {
  fs::create_directories(directory);
  ModelParams& params = const_cast<ModelParams&>(archive.params);
  const std::vector<TensorRef> refs = enumerate_tensors(params);
  const ordered_json doc =
      config_to_json(archive.config, archive.vocab, archive.labels, refs);
  std::ofstream out(fs::path(directory) / "config.json");
  if (!out) throw DataError("cannot write config.json under " + directory);
  out << doc.dump(2) << '\n';
  write_weights(refs, (fs::path(directory) / "weights.bin").string());
}

ModelArchive load_archive(const std::string& directory) {
  const ordered_json doc = load_config_json(directory);
  ModelArchive archive;
  try {
    archive.config = config_from_json(doc);
    archive.vocab = vocab_from_json(doc);
    archive.labels.intents = doc.at("intents").get<std::vector<std::string>>();
    archive.labels.slot_tags = doc.at("slot_tags").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(directory + "/config.json: " + e.what());
  }
  if (archive.vocab.size() != archive.config.vocab_size) {
    throw ConfigError(directory + ": token list length disagrees with vocab_size");
  }
  archive.params = init_params(archive.config, static_cast<int>(archive.labels.intents.size()),
                               static_cast<int>(archive.labels.slot_tags.size()), 0);
  const std::vector<TensorRef> refs = enumerate_tensors(archive.params);
  check_manifest(doc.at("manifest"), refs, directory);
  read_weights(refs, (fs::path(directory) / "weights.bin").string());
  return archive;
}

void save_encoder_archive(const ModelConfig& config, const Vocabulary& vocab,
                          const EncoderParams& encoder, const std::string& directory) {
  fs::create_directories(directory);
  EncoderParams& params = const_cast<EncoderParams&>(encoder);
  const std::vector<TensorRef> refs = enumerate_encoder_tensors(params);
  const ordered_json doc = config_to_json(config, vocab, LabelMaps{}, refs);
  std::ofstream out(fs::path(directory) / "config.json");
  if (!out) throw DataError("cannot write config.json under " + directory);
  out << doc.dump(2) << '\n';
  write_weights(refs, (fs::path(directory) / "weights.bin").string());
}

EncoderArchive load_encoder_archive(const std::string& directory) {
  const ordered_json doc = load_config_json(directory);
  EncoderArchive archive;
  try {
    archive.config = config_from_json(doc);
    archive.vocab = vocab_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(directory + "/config.json: " + e.what());
  }
  if (archive.vocab.size() != archive.config.vocab_size) {
    throw ConfigError(directory + ": token list length disagrees with vocab_size");
  }
  ModelParams scratch = init_params(archive.config, 0, 0, 0);
  archive.encoder = std::move(scratch.encoder);
  const std::vector<TensorRef> refs = enumerate_encoder_tensors(archive.encoder);
  check_manifest(doc.at("manifest"), refs, directory);
  read_weights(refs, (fs::path(directory) / "weights.bin").string());
  return archive;
}

}  // namespace jointslu
