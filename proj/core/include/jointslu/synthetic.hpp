#pragma once

#include <cstdint>
#include <string>

#include "jointslu/data.hpp"

namespace jointslu {

// Template-grammar corpus for end-to-end runs: 3 intents, 6 slot types, a
// 40-word lexicon per language. Languages other than "en" get every surface
// word suffixed with "_<language>", so lexicons are disjoint across languages
// while intent and tag names stay shared.
struct SyntheticOptions {
  std::uint64_t seed = 20240601;
  std::string language = "en";
  int sentences = 800;
  int train = 600;
  int valid = 100;
  int test = 100;
};

DatasetSplit make_synthetic_corpus(const SyntheticOptions& options = {});

}  // namespace jointslu
