#include "jointslu/synthetic.hpp"

#include <array>
#include <random>
#include <vector>

#include "jointslu/errors.hpp"

namespace jointslu {

namespace {

struct SlotPool {
  const char* type;
  std::vector<const char*> words;
  int max_span;  // span length drawn uniformly from [1, max_span]
};

// 23 slot words + 17 carrier words = a 40-word lexicon.
const std::array<SlotPool, 6> kPools = {{
    {"artist", {"u2", "adele", "coldplay", "queen"}, 1},
    {"song", {"yesterday", "thunder", "hello", "paradise", "magic"}, 2},
    {"city", {"boston", "denver", "paris", "rome"}, 1},
    {"restaurant", {"marios", "lucia", "bellavista"}, 2},
    {"cuisine", {"italian", "mexican", "sushi"}, 1},
    {"date", {"today", "tomorrow", "friday", "monday"}, 1},
}};

struct Template {
  const char* intent;
  // Tokens; a leading '$' marks a slot of that type.
  std::vector<const char*> pieces;
};

const std::vector<Template> kTemplates = {
    {"play_music", {"play", "$song", "by", "$artist"}},
    {"play_music", {"play", "some", "$artist", "music"}},
    {"play_music", {"put", "on", "$song"}},
    {"play_music", {"play", "$song"}},
    {"book_restaurant", {"book", "a", "table", "at", "$restaurant", "in", "$city", "for", "$date"}},
    {"book_restaurant", {"reserve", "a", "$cuisine", "table", "at", "$restaurant"}},
    {"book_restaurant", {"book", "$restaurant", "in", "$city"}},
    {"book_restaurant", {"book", "a", "$cuisine", "table", "for", "$date"}},
    {"get_weather", {"weather", "in", "$city", "$date"}},
    {"get_weather", {"will", "it", "rain", "in", "$city"}},
    {"get_weather", {"weather", "at", "$city", "for", "$date"}},
};

const SlotPool& pool_for(const std::string& type) {
  for (const SlotPool& pool : kPools) {
    if (type == pool.type) return pool;
  }
  throw InternalError("unknown synthetic slot type " + type);
}

}  // namespace

DatasetSplit make_synthetic_corpus(const SyntheticOptions& options) {
  if (options.sentences != options.train + options.valid + options.test) {
    throw InputError("synthetic split sizes must sum to the sentence count");
  }
  const std::string suffix = options.language == "en" ? "" : "_" + options.language;
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick_template(0, kTemplates.size() - 1);

  std::vector<LabeledExample> all;
  all.reserve(static_cast<std::size_t>(options.sentences));
  for (int s = 0; s < options.sentences; ++s) {
    const Template& tpl = kTemplates[pick_template(rng)];
    LabeledExample ex;
    ex.intent = tpl.intent;
    ex.language = options.language;
    for (const char* piece : tpl.pieces) {
      if (piece[0] != '$') {
        ex.tokens.push_back(piece + suffix);
        ex.tags.push_back("O");
        continue;
      }
      const SlotPool& pool = pool_for(piece + 1);
      std::uniform_int_distribution<int> span_len(1, pool.max_span);
      std::uniform_int_distribution<std::size_t> pick_word(0, pool.words.size() - 1);
      const int len = span_len(rng);
      for (int w = 0; w < len; ++w) {
        ex.tokens.push_back(pool.words[pick_word(rng)] + suffix);
        ex.tags.push_back((w == 0 ? "B-" : "I-") + std::string(pool.type));
      }
    }
    all.push_back(std::move(ex));
  }

  DatasetSplit split;
  auto it = all.begin();
  split.train.assign(it, it + options.train);
  it += options.train;
  split.valid.assign(it, it + options.valid);
  it += options.valid;
  split.test.assign(it, it + options.test);
  return split;
}

}  // namespace jointslu
