#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "jointslu/archive.hpp"
#include "jointslu/data.hpp"

namespace jointslu {

// Maximal typed token interval; end is exclusive.
struct Span {
  std::string type;
  int start = 0;
  int end = 0;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

// conlleval chunking: a span starts at B-x, or at I-x when the previous tag is
// O, sequence start, or a different type. Returned spans are ordered and
// disjoint. Throws InputError on tags that are not O/B-x/I-x.
std::vector<Span> extract_spans(const std::vector<std::string>& tags);

struct SlotCounts {
  long true_positives = 0;
  long predicted = 0;
  long gold = 0;
};

struct SlotScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  SlotCounts counts;
};

// Micro-averaged exact-span match over all sentences. 0/0 ratios score 0.
SlotScores slot_scores(const std::vector<std::vector<std::string>>& gold,
                       const std::vector<std::vector<std::string>>& pred);

double intent_accuracy(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred);

enum class SentenceMatch { kSpanEquality, kRawTagEquality };

// Fraction of sentences with the correct intent AND matching slots, where
// "matching" defaults to span-set equality after IOB repair.
double sentence_accuracy(const std::vector<std::string>& gold_intents,
                         const std::vector<std::vector<std::string>>& gold_tags,
                         const std::vector<std::string>& pred_intents,
                         const std::vector<std::vector<std::string>>& pred_tags,
                         SentenceMatch match = SentenceMatch::kSpanEquality);

struct MetricsReport {
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
  double intent_accuracy = 0.0;
  double sentence_accuracy = 0.0;
  SlotCounts counts;
  long sentences = 0;
  std::map<std::string, MetricsReport> per_language;  // nested one level only
};

struct SentencePrediction {
  std::string intent;
  std::vector<std::string> tags;
};

// Aggregates the three headline metrics; adds per-language sub-reports when
// the gold examples carry more than one distinct language tag.
MetricsReport score_predictions(const std::vector<LabeledExample>& gold,
                                const std::vector<SentencePrediction>& pred,
                                SentenceMatch match = SentenceMatch::kSpanEquality);

// Deterministic forward + decode for one whitespace-tokenized utterance.
SentencePrediction predict_tokens(const ModelParams& params, const ModelConfig& config,
                                  const Vocabulary& vocab, const LabelMaps& labels,
                                  const std::vector<std::string>& tokens);
SentencePrediction predict_example(const ModelArchive& archive,
                                   const std::vector<std::string>& tokens);

MetricsReport evaluate(const ModelArchive& archive, const std::vector<LabeledExample>& test,
                       SentenceMatch match = SentenceMatch::kSpanEquality);

std::string metrics_to_json(const MetricsReport& report, bool include_per_language, int indent = 2);

// conlleval-style block: "token gold pred" per line, blank line between sentences.
void write_conll(std::ostream& out, const std::vector<LabeledExample>& gold,
                 const std::vector<SentencePrediction>& pred);

}  // namespace jointslu
