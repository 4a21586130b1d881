#include <doctest.h>

#include <random>

#include "jointslu/errors.hpp"
#include "jointslu/metrics.hpp"
#include "oracle_utils.hpp"

using namespace jointslu;
using jointslu::testing::brute_force_slot_scores;
using jointslu::testing::brute_force_spans;
using jointslu::testing::random_tags;

namespace {

LabeledExample gold(std::vector<std::string> tokens, std::vector<std::string> tags,
                    std::string intent, std::string lang = "en") {
  return LabeledExample{std::move(tokens), std::move(tags), std::move(intent), std::move(lang)};
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("a four-token span is extracted as one chunk") {
  const std::vector<Span> spans =
      extract_spans({"O", "B-song", "I-song", "I-song", "I-song", "O"});
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == Span{"song", 1, 5});
}

TEST_CASE("all-O sequences have no spans") {
  CHECK(extract_spans({"O", "O", "O"}).empty());
  CHECK(extract_spans({}).empty());
}

TEST_CASE("orphan I tags open repaired spans") {
  const std::vector<Span> spans = extract_spans({"I-artist", "I-song"});
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == Span{"artist", 0, 1});
  CHECK(spans[1] == Span{"song", 1, 2});
}

TEST_CASE("invalid tag strings are rejected") {
  CHECK_THROWS_AS(extract_spans({"O", "Q-song"}), InputError);
  CHECK_THROWS_AS(extract_spans({"B-"}), InputError);
}

TEST_CASE("spans are ordered, disjoint, and a fixed point under re-tagging") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<std::string> tags = random_tags(1 + static_cast<int>(rng() % 12), 4, rng);
    const std::vector<Span> spans = extract_spans(tags);
    for (std::size_t i = 1; i < spans.size(); ++i) {
      CHECK(spans[i - 1].end <= spans[i].start);
    }
    // canonical tags -> same spans
    std::vector<std::string> canonical(tags.size(), "O");
    for (const Span& span : spans) {
      canonical[static_cast<std::size_t>(span.start)] = "B-" + span.type;
      for (int j = span.start + 1; j < span.end; ++j) {
        canonical[static_cast<std::size_t>(j)] = "I-" + span.type;
      }
    }
    CHECK(extract_spans(canonical) == spans);
  }
}

TEST_CASE("exact prediction scores one across the board") {
  const std::vector<std::vector<std::string>> tags = {
      {"O", "B-a", "I-a"}, {"B-b", "O"}, {"O", "B-c"}};
  const SlotScores scores = slot_scores(tags, tags);
  CHECK(scores.precision == 1.0);
  CHECK(scores.recall == 1.0);
  CHECK(scores.f1 == 1.0);
  CHECK(scores.counts.gold == 3);
}

TEST_CASE("one of two matching spans scores one half") {
  const std::vector<std::vector<std::string>> gold_tags = {{"B-a", "O", "B-b"}};
  const std::vector<std::vector<std::string>> pred_tags = {{"B-a", "O", "B-c"}};
  const SlotScores scores = slot_scores(gold_tags, pred_tags);
  CHECK(scores.precision == 0.5);
  CHECK(scores.recall == 0.5);
  CHECK(scores.f1 == 0.5);
}

TEST_CASE("empty predictions and empty gold take the zero conventions") {
  const SlotScores none = slot_scores({{"O", "O"}}, {{"O", "O"}});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK_THROWS_AS(slot_scores({{"O"}}, {{"O"}, {"O"}}), InputError);
  CHECK_THROWS_AS(slot_scores({{"O"}}, {{"O", "O"}}), InputError);
}

TEST_CASE("swapping gold and pred swaps precision and recall") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<std::string>> a, b;
    for (int s = 0; s < 4; ++s) {
      const int len = 1 + static_cast<int>(rng() % 10);
      a.push_back(random_tags(len, 3, rng));
      b.push_back(random_tags(len, 3, rng));
    }
    const SlotScores ab = slot_scores(a, b);
    const SlotScores ba = slot_scores(b, a);
    CHECK(ab.precision == ba.recall);
    CHECK(ab.recall == ba.precision);
    CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-15));
  }
}

TEST_CASE("slot scores agree with the brute-force oracle on 1000 random pairs") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 1 + static_cast<int>(rng() % 12);
    const std::vector<std::vector<std::string>> gold_tags = {random_tags(len, 5, rng)};
    const std::vector<std::vector<std::string>> pred_tags = {random_tags(len, 5, rng)};
    const SlotScores ours = slot_scores(gold_tags, pred_tags);
    const auto oracle = brute_force_slot_scores(gold_tags, pred_tags);
    CHECK(ours.counts.true_positives == oracle.true_positives);
    CHECK(ours.counts.predicted == oracle.predicted);
    CHECK(ours.counts.gold == oracle.gold);
    CHECK(std::abs(ours.precision - oracle.precision) <= 1e-12);
    CHECK(std::abs(ours.recall - oracle.recall) <= 1e-12);
    CHECK(std::abs(ours.f1 - oracle.f1) <= 1e-12);
  }
}

TEST_CASE("intent accuracy is the exact-match fraction") {
  CHECK(intent_accuracy({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK(intent_accuracy({"a", "b", "c", "d"}, {"a", "x", "y", "z"}) == 0.25);
  CHECK(intent_accuracy({"playmusic"}, {"PlayMusic"}) == 0.0);
  CHECK_THROWS_AS(intent_accuracy({}, {}), InputError);
}

TEST_CASE("sentence accuracy needs both the intent and every span") {
  CHECK(sentence_accuracy({"a"}, {{"O", "B-x"}}, {"a"}, {{"O", "B-x"}}) == 1.0);
  // right intent, one boundary off
  CHECK(sentence_accuracy({"a"}, {{"B-x", "I-x"}}, {"a"}, {{"B-x", "O"}}) == 0.0);
  // repaired prefixes count as the same span set
  CHECK(sentence_accuracy({"a"}, {{"B-song", "I-song"}}, {"a"}, {{"I-song", "I-song"}}) == 1.0);
  // ... but not under raw tag equality
  CHECK(sentence_accuracy({"a"}, {{"B-song", "I-song"}}, {"a"}, {{"I-song", "I-song"}},
                          SentenceMatch::kRawTagEquality) == 0.0);
}

TEST_CASE("replaying the gold labels scores a perfect report") {
  const std::vector<LabeledExample> examples = {
      gold({"play", "u2"}, {"O", "B-artist"}, "PlayMusic"),
      gold({"rain", "rome"}, {"O", "B-city"}, "GetWeather")};
  std::vector<SentencePrediction> preds;
  for (const auto& ex : examples) preds.push_back({ex.intent, ex.tags});
  const MetricsReport report = score_predictions(examples, preds);
  CHECK(report.slot_f1 == 1.0);
  CHECK(report.intent_accuracy == 1.0);
  CHECK(report.sentence_accuracy == 1.0);
}

TEST_CASE("an untrained zeroed head predicts the first intent everywhere") {
  ModelConfig config;
  config.num_layers = 1;
  config.hidden_size = 16;
  config.num_heads = 2;
  config.ffn_size = 32;
  config.max_seq_len = 8;

  ModelArchive archive;
  archive.vocab = Vocabulary::from_tokens({"w"}, false);
  archive.labels.intents = {"a", "b", "c", "d"};
  archive.labels.slot_tags = {"O"};
  config.vocab_size = archive.vocab.size();
  archive.config = config;
  archive.params = init_params(config, 4, 1, 5);
  archive.params.heads.w_intent.setZero();
  archive.params.heads.b_intent.setZero();

  // balanced 4-intent test set; ties resolve to intent index 0 ("a")
  std::vector<LabeledExample> test;
  for (const char* intent : {"a", "b", "c", "d"}) {
    test.push_back(gold({"w"}, {"O"}, intent));
    test.push_back(gold({"w"}, {"O"}, intent));
  }
  const MetricsReport report = evaluate(archive, test);
  CHECK(report.intent_accuracy == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("mixed-language input yields per-language sub-reports that partition it") {
  const std::vector<LabeledExample> examples = {
      gold({"play", "u2"}, {"O", "B-artist"}, "PlayMusic", "en"),
      gold({"rain"}, {"O"}, "GetWeather", "en"),
      gold({"suona", "u2"}, {"O", "B-artist"}, "PlayMusic", "it")};
  std::vector<SentencePrediction> preds;
  for (const auto& ex : examples) preds.push_back({ex.intent, ex.tags});
  const MetricsReport report = score_predictions(examples, preds);
  REQUIRE(report.per_language.size() == 2);
  CHECK(report.per_language.at("en").sentences + report.per_language.at("it").sentences ==
        report.sentences);
  const std::string json = metrics_to_json(report, true);
  CHECK(json.find("\"it\"") != std::string::npos);
}

TEST_CASE("sentence accuracy never beats intent accuracy or span-set matching") {
  std::mt19937_64 rng(31);
  const std::vector<std::string> intents = {"a", "b", "c"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledExample> examples;
    std::vector<SentencePrediction> preds;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int s = 0; s < n; ++s) {
      const int len = 1 + static_cast<int>(rng() % 8);
      examples.push_back(gold(std::vector<std::string>(static_cast<std::size_t>(len), "w"),
                              random_tags(len, 3, rng), intents[rng() % 3]));
      preds.push_back({intents[rng() % 3], random_tags(len, 3, rng)});
    }
    const MetricsReport report = score_predictions(examples, preds);
    CHECK(report.sentence_accuracy <= report.intent_accuracy + 1e-15);
    long span_matches = 0;
    for (int s = 0; s < n; ++s) {
      if (extract_spans(examples[static_cast<std::size_t>(s)].tags) ==
          extract_spans(preds[static_cast<std::size_t>(s)].tags)) {
        ++span_matches;
      }
    }
    CHECK(report.sentence_accuracy <= static_cast<double>(span_matches) / n + 1e-15);
  }
}

TEST_CASE("the span extractor agrees with the enumeration oracle") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<std::string> tags = random_tags(1 + static_cast<int>(rng() % 12), 5, rng);
    std::vector<Span> ours = extract_spans(tags);
    std::sort(ours.begin(), ours.end());
    CHECK(ours == brute_force_spans(tags));
  }
}

TEST_CASE("the conll writer emits token gold pred lines with sentence breaks") {
  const std::vector<LabeledExample> examples = {gold({"play", "u2"}, {"O", "B-artist"}, "P")};
  const std::vector<SentencePrediction> preds = {{"P", {"O", "O"}}};
  std::ostringstream out;
  write_conll(out, examples, preds);
  CHECK(out.str() == "play O O\nu2 B-artist O\n\n");
}

}  // TEST_SUITE
