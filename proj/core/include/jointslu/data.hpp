#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jointslu/heads.hpp"

namespace jointslu {

// Reserved vocabulary ids; never reassigned.
inline constexpr int kSeqStartId = 0;
inline constexpr int kPadId = 1;
inline constexpr int kUnknownId = 2;
inline constexpr int kMaskTokenId = 3;
inline constexpr const char* kReservedTokens[4] = {"[CLS]", "[PAD]", "[UNK]", "[MASK]"};

struct LabeledExample {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // IOB, same length as tokens
  std::string intent;
  std::string language;
};

struct DatasetSplit {
  std::vector<LabeledExample> train, valid, test;
};

// true for "O", "B-x" or "I-x" with nonempty x.
bool is_valid_tag(const std::string& tag);

struct Vocabulary {
  std::vector<std::string> id_to_token;  // index = id; slots 0..3 are reserved
  std::unordered_map<std::string, int> token_to_id;
  bool lowercase = false;

  static Vocabulary build(const std::vector<LabeledExample>& train, bool lowercase = false);
  static Vocabulary from_tokens(std::vector<std::string> tokens, bool lowercase);

  int size() const { return static_cast<int>(id_to_token.size()); }
  int lookup(const std::string& token) const;  // kUnknownId for unseen tokens
};

struct AlignmentPair {
  LabeledExample source;
  std::vector<std::string> target_tokens;
  std::vector<std::pair<int, int>> alignment;  // (source index, target index)
};

// Directory layout: <dir>/{train,valid,test}/{seq.in,seq.out,label}. Line i of
// the three files forms one example. Tolerates CRLF.
DatasetSplit load_dataset(const std::string& directory, const std::string& language);
std::vector<LabeledExample> load_split_dir(const std::string& directory,
                                           const std::string& language);
void write_dataset(const DatasetSplit& split, const std::string& directory);
void write_split_dir(const std::vector<LabeledExample>& examples, const std::string& directory);

// Intents and tags from the train set only, sorted; "O" always present.
LabelMaps build_label_maps(const std::vector<LabeledExample>& train);

struct EncodedExample {
  std::vector<int> ids;                     // [CLS] + word ids (+ padding when batched)
  std::vector<std::uint8_t> attention_mask; // 1 = real position
  std::vector<int> tag_ids;                 // aligned with ids; -1 where no gold tag
  std::vector<std::uint8_t> loss_mask;      // 0 at position 0 and padding
  int intent_id = -1;
};

struct EncodeStats {
  long truncated = 0;
};

// strict_labels: unknown intent or tag throws InputError naming the label;
// otherwise unknown labels encode as -1 (scored wrong downstream).
EncodedExample encode_example(const LabeledExample& example, const Vocabulary& vocab,
                              const LabelMaps& maps, int max_len, bool strict_labels,
                              EncodeStats* stats = nullptr);

// ceil(fraction * n) examples sampled uniformly without replacement.
std::vector<LabeledExample> subset_fraction(const std::vector<LabeledExample>& train,
                                            double fraction, std::uint64_t seed);

// Concatenates train and valid sets; test examples keep their language tags so
// evaluation can split per language. Duplicate language tags are an error.
DatasetSplit merge_multilingual(const std::vector<DatasetSplit>& datasets);

// Transfers slot types through the token alignment, then recomputes B/I
// prefixes left to right. Unlinked target tokens get "O"; conflicting links
// resolve to the lowest source index.
std::vector<std::string> project_slots(const AlignmentPair& pair);

using EntityCatalog = std::map<std::string, std::vector<std::string>>;

// Replaces each maximal slot span whose type is cataloged with a uniformly
// chosen entry (tokenized on spaces); tags are regenerated as B-x, I-x...
LabeledExample substitute_entities(const LabeledExample& example, const EntityCatalog& catalog,
                                   std::mt19937_64& rng);

EntityCatalog load_entity_catalog(const std::string& path);

struct ProjectionRecord {
  std::vector<std::string> source_tokens;
  std::vector<std::string> source_tags;
  std::string intent;
  std::vector<std::string> target_tokens;
  std::vector<std::pair<int, int>> alignment;
};

// JSON lines with fields {source_tokens, source_tags, intent, target_tokens,
// alignment: [[i, j], ...]}.
std::vector<ProjectionRecord> load_projection_records(const std::string& path);

}  // namespace jointslu
