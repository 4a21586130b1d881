#include "jointslu/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jointslu/errors.hpp"

namespace fs = std::filesystem;

namespace jointslu {

namespace {

std::string lowercased(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Slot type of a tag, or "" for O.
std::string tag_type(const std::string& tag) {
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-' ? tag.substr(2) : "";
}

}  // namespace

bool is_valid_tag(const std::string& tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

Vocabulary Vocabulary::build(const std::vector<LabeledExample>& train, bool lowercase) {
  std::set<std::string> words;
  for (const auto& ex : train) {
    for (const auto& tok : ex.tokens) words.insert(lowercase ? lowercased(tok) : tok);
  }
  std::vector<std::string> tokens(words.begin(), words.end());
  return from_tokens(std::move(tokens), lowercase);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, bool lowercase) {
  Vocabulary vocab;
  vocab.lowercase = lowercase;
  vocab.id_to_token.assign(std::begin(kReservedTokens), std::end(kReservedTokens));
  for (auto& tok : tokens) vocab.id_to_token.push_back(std::move(tok));
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
    vocab.token_to_id.emplace(vocab.id_to_token[i], static_cast<int>(i));
  }
  return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id.find(lowercase ? lowercased(token) : token);
  return it == token_to_id.end() ? kUnknownId : it->second;
}

std::vector<LabeledExample> load_split_dir(const std::string& directory,
                                           const std::string& language) {
  const std::string in_path = (fs::path(directory) / "seq.in").string();
  const std::string out_path = (fs::path(directory) / "seq.out").string();
  const std::string label_path = (fs::path(directory) / "label").string();
  const auto in_lines = read_lines(in_path);
  const auto out_lines = read_lines(out_path);
  const auto label_lines = read_lines(label_path);
  if (in_lines.size() != out_lines.size() || in_lines.size() != label_lines.size()) {
    throw DataError("line counts differ under " + directory + ": seq.in=" +
                    std::to_string(in_lines.size()) + " seq.out=" +
                    std::to_string(out_lines.size()) + " label=" +
                    std::to_string(label_lines.size()));
  }
  std::vector<LabeledExample> examples;
  examples.reserve(in_lines.size());
  for (std::size_t i = 0; i < in_lines.size(); ++i) {
    LabeledExample ex;
    ex.tokens = split_ws(in_lines[i]);
    ex.tags = split_ws(out_lines[i]);
    ex.intent = label_lines[i];
    ex.language = language;
    if (ex.tokens.empty()) {
      throw DataError(in_path + ":" + std::to_string(i + 1) + ": empty token line");
    }
    if (ex.tokens.size() != ex.tags.size()) {
      throw DataError(out_path + ":" + std::to_string(i + 1) + ": " +
                      std::to_string(ex.tags.size()) + " tags for " +
                      std::to_string(ex.tokens.size()) + " tokens");
    }
    for (const auto& tag : ex.tags) {
      if (!is_valid_tag(tag)) {
        throw DataError(out_path + ":" + std::to_string(i + 1) + ": malformed tag '" + tag + "'");
      }
    }
    if (ex.intent.empty()) {
      throw DataError(label_path + ":" + std::to_string(i + 1) + ": empty intent");
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

DatasetSplit load_dataset(const std::string& directory, const std::string& language) {
  DatasetSplit split;
  split.train = load_split_dir((fs::path(directory) / "train").string(), language);
  split.valid = load_split_dir((fs::path(directory) / "valid").string(), language);
  split.test = load_split_dir((fs::path(directory) / "test").string(), language);
  return split;
}

void write_split_dir(const std::vector<LabeledExample>& examples, const std::string& directory) {
  fs::create_directories(directory);
  std::ofstream in_file(fs::path(directory) / "seq.in", std::ios::binary);
  std::ofstream out_file(fs::path(directory) / "seq.out", std::ios::binary);
  std::ofstream label_file(fs::path(directory) / "label", std::ios::binary);
  if (!in_file || !out_file || !label_file) {
    throw DataError("cannot write split files under " + directory);
  }
  for (const auto& ex : examples) {
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) in_file << ' ';
      in_file << ex.tokens[i];
    }
    in_file << '\n';
    for (std::size_t i = 0; i < ex.tags.size(); ++i) {
      if (i) out_file << ' ';
      out_file << ex.tags[i];
    }
    out_file << '\n';
    label_file << ex.intent << '\n';
  }
}

void write_dataset(const DatasetSplit& split, const std::string& directory) {
  write_split_dir(split.train, (fs::path(directory) / "train").string());
  write_split_dir(split.valid, (fs::path(directory) / "valid").string());
  write_split_dir(split.test, (fs::path(directory) / "test").string());
}

LabelMaps build_label_maps(const std::vector<LabeledExample>& train) {
  if (train.empty()) throw InputError("cannot build label maps from an empty train set");
  std::set<std::string> intents, tags;
  tags.insert("O");
  for (const auto& ex : train) {
    intents.insert(ex.intent);
    for (const auto& tag : ex.tags) tags.insert(tag);
  }
  LabelMaps maps;
  maps.intents.assign(intents.begin(), intents.end());
  maps.slot_tags.assign(tags.begin(), tags.end());
  return maps;
}

EncodedExample encode_example(const LabeledExample& example, const Vocabulary& vocab,
                              const LabelMaps& maps, int max_len, bool strict_labels,
                              EncodeStats* stats) {
  if (example.tokens.empty()) throw InputError("example has no tokens");
  if (example.tokens.size() != example.tags.size()) {
    throw InputError("example token/tag lengths differ");
  }
  EncodedExample enc;
  enc.intent_id = maps.intent_index(example.intent);
  if (enc.intent_id < 0 && strict_labels) {
    throw InputError("unknown intent label '" + example.intent + "'");
  }

  const std::size_t keep = std::min(example.tokens.size(),
                                    static_cast<std::size_t>(max_len - 1));
  if (keep < example.tokens.size() && stats != nullptr) ++stats->truncated;

  enc.ids.push_back(kSeqStartId);
  enc.attention_mask.push_back(1);
  enc.tag_ids.push_back(-1);
  enc.loss_mask.push_back(0);
  for (std::size_t i = 0; i < keep; ++i) {
    enc.ids.push_back(vocab.lookup(example.tokens[i]));
    enc.attention_mask.push_back(1);
    const int tag_id = maps.slot_index(example.tags[i]);
    if (tag_id < 0 && strict_labels) {
      throw InputError("unknown slot tag '" + example.tags[i] + "'");
    }
    enc.tag_ids.push_back(tag_id);
    enc.loss_mask.push_back(1);
  }
  return enc;
}

std::vector<LabeledExample> subset_fraction(const std::vector<LabeledExample>& train,
                                            double fraction, std::uint64_t seed) {
  if (train.empty()) throw InputError("subset_fraction needs a nonempty train set");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must be in (0, 1]");
  const std::size_t k =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train.size())));
  std::vector<std::size_t> indices(train.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  std::vector<LabeledExample> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(train[indices[i]]);
  return out;
}

DatasetSplit merge_multilingual(const std::vector<DatasetSplit>& datasets) {
  if (datasets.size() < 2) throw InputError("merge_multilingual needs at least 2 datasets");
  std::set<std::string> seen;
  for (const auto& ds : datasets) {
    std::set<std::string> langs;
    for (const auto& ex : ds.train) langs.insert(ex.language);
    for (const auto& ex : ds.valid) langs.insert(ex.language);
    for (const auto& ex : ds.test) langs.insert(ex.language);
    for (const auto& lang : langs) {
      if (!seen.insert(lang).second) {
        throw InputError("duplicate language tag '" + lang + "' across merged datasets");
      }
    }
  }
  DatasetSplit merged;
  for (const auto& ds : datasets) {
    merged.train.insert(merged.train.end(), ds.train.begin(), ds.train.end());
    merged.valid.insert(merged.valid.end(), ds.valid.begin(), ds.valid.end());
    merged.test.insert(merged.test.end(), ds.test.begin(), ds.test.end());
  }
  return merged;
}

std::vector<std::string> project_slots(const AlignmentPair& pair) {
  const int n_source = static_cast<int>(pair.source.tokens.size());
  const int n_target = static_cast<int>(pair.target_tokens.size());
  if (pair.source.tags.size() != pair.source.tokens.size()) {
    throw InputError("source token/tag lengths differ");
  }
  for (const auto& [si, ti] : pair.alignment) {
    if (si < 0 || si >= n_source || ti < 0 || ti >= n_target) {
      throw InputError("alignment index (" + std::to_string(si) + ", " + std::to_string(ti) +
                       ") out of range");
    }
  }

  // Slot type per target token: lowest-index typed source link wins.
  std::vector<int> chosen_source(static_cast<std::size_t>(n_target), -1);
  for (const auto& [si, ti] : pair.alignment) {
    if (tag_type(pair.source.tags[static_cast<std::size_t>(si)]).empty()) continue;
    int& cur = chosen_source[static_cast<std::size_t>(ti)];
    if (cur < 0 || si < cur) cur = si;
  }
  std::vector<std::string> types(static_cast<std::size_t>(n_target));
  for (int t = 0; t < n_target; ++t) {
    const int si = chosen_source[static_cast<std::size_t>(t)];
    types[static_cast<std::size_t>(t)] =
        si < 0 ? "" : tag_type(pair.source.tags[static_cast<std::size_t>(si)]);
  }

  // Recompute B/I prefixes: each maximal run of one type becomes B-x, I-x...
  std::vector<std::string> tags(static_cast<std::size_t>(n_target));
  for (int t = 0; t < n_target; ++t) {
    const std::string& type = types[static_cast<std::size_t>(t)];
    if (type.empty()) {
      tags[static_cast<std::size_t>(t)] = "O";
    } else if (t > 0 && types[static_cast<std::size_t>(t - 1)] == type) {
      tags[static_cast<std::size_t>(t)] = "I-" + type;
    } else {
      tags[static_cast<std::size_t>(t)] = "B-" + type;
    }
  }
  return tags;
}

LabeledExample substitute_entities(const LabeledExample& example, const EntityCatalog& catalog,
                                   std::mt19937_64& rng) {
  if (example.tokens.size() != example.tags.size()) {
    throw InputError("example token/tag lengths differ");
  }
  LabeledExample out;
  out.intent = example.intent;
  out.language = example.language;

  const std::size_t n = example.tokens.size();
  std::size_t i = 0;
  while (i < n) {
    const std::string type = tag_type(example.tags[i]);
    if (type.empty()) {
      out.tokens.push_back(example.tokens[i]);
      out.tags.push_back(example.tags[i]);
      ++i;
      continue;
    }
    // Maximal span: the opener plus following I-<type> tags.
    std::size_t end = i + 1;
    while (end < n && example.tags[end] == "I-" + type) ++end;

    auto it = catalog.find(type);
    if (it == catalog.end()) {
      for (std::size_t j = i; j < end; ++j) {
        out.tokens.push_back(example.tokens[j]);
        out.tags.push_back(example.tags[j]);
      }
    } else {
      if (it->second.empty()) {
        throw InputError("entity catalog has no entries for slot type '" + type + "'");
      }
      std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
      const std::vector<std::string> replacement = split_ws(it->second[pick(rng)]);
      if (replacement.empty()) {
        throw InputError("entity catalog entry for '" + type + "' is blank");
      }
      for (std::size_t j = 0; j < replacement.size(); ++j) {
        out.tokens.push_back(replacement[j]);
        out.tags.push_back((j == 0 ? "B-" : "I-") + type);
      }
    }
    i = end;
  }
  return out;
}

EntityCatalog load_entity_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open entity catalog " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("entity catalog " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw DataError("entity catalog must be a JSON object");
  EntityCatalog catalog;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_array()) throw DataError("catalog entry '" + key + "' must be an array");
    std::vector<std::string> entries;
    for (const auto& item : value) {
      if (!item.is_string()) throw DataError("catalog entry '" + key + "' must hold strings");
      entries.push_back(item.get<std::string>());
    }
    catalog.emplace(key, std::move(entries));
  }
  return catalog;
}

std::vector<ProjectionRecord> load_projection_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open projection input " + path);
  std::vector<ProjectionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      ProjectionRecord rec;
      rec.source_tokens = doc.at("source_tokens").get<std::vector<std::string>>();
      rec.source_tags = doc.at("source_tags").get<std::vector<std::string>>();
      rec.intent = doc.at("intent").get<std::string>();
      rec.target_tokens = doc.at("target_tokens").get<std::vector<std::string>>();
      for (const auto& link : doc.at("alignment")) {
        rec.alignment.emplace_back(link.at(0).get<int>(), link.at(1).get<int>());
      }
      records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace jointslu
