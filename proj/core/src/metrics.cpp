#include "jointslu/metrics.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "jointslu/errors.hpp"

using ordered_json = nlohmann::ordered_json;

namespace jointslu {

namespace {

std::string tag_type(const std::string& tag) {
  return tag.size() > 2 ? tag.substr(2) : std::string();
}

bool span_sets_equal(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<Span> sa = extract_spans(a);
  std::vector<Span> sb = extract_spans(b);
  return sa == sb;  // extract_spans output is ordered
}

double safe_ratio(long num, long den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

MetricsReport score_flat(const std::vector<LabeledExample>& gold,
                         const std::vector<SentencePrediction>& pred, SentenceMatch match) {
  MetricsReport report;
  report.sentences = static_cast<long>(gold.size());
  long correct_intents = 0;
  long correct_sentences = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::vector<Span> gold_spans = extract_spans(gold[i].tags);
    const std::vector<Span> pred_spans = extract_spans(pred[i].tags);
    report.counts.gold += static_cast<long>(gold_spans.size());
    report.counts.predicted += static_cast<long>(pred_spans.size());
    for (const Span& s : pred_spans) {
      if (std::find(gold_spans.begin(), gold_spans.end(), s) != gold_spans.end()) {
        ++report.counts.true_positives;
      }
    }
    const bool intent_ok = gold[i].intent == pred[i].intent;
    if (intent_ok) ++correct_intents;
    const bool slots_ok = match == SentenceMatch::kSpanEquality
                              ? gold_spans == pred_spans
                              : gold[i].tags == pred[i].tags;
    if (intent_ok && slots_ok) ++correct_sentences;
  }
  report.slot_precision = safe_ratio(report.counts.true_positives, report.counts.predicted);
  report.slot_recall = safe_ratio(report.counts.true_positives, report.counts.gold);
  const double pr = report.slot_precision + report.slot_recall;
  report.slot_f1 = pr == 0.0 ? 0.0 : 2.0 * report.slot_precision * report.slot_recall / pr;
  report.intent_accuracy = safe_ratio(correct_intents, report.sentences);
  report.sentence_accuracy = safe_ratio(correct_sentences, report.sentences);
  return report;
}

ordered_json report_to_json(const MetricsReport& report, bool include_per_language) {
  ordered_json doc;
  doc["slot_precision"] = report.slot_precision;
  doc["slot_recall"] = report.slot_recall;
  doc["slot_f1"] = report.slot_f1;
  doc["intent_accuracy"] = report.intent_accuracy;
  doc["sentence_accuracy"] = report.sentence_accuracy;
  ordered_json counts;
  counts["true_positives"] = report.counts.true_positives;
  counts["predicted_spans"] = report.counts.predicted;
  counts["gold_spans"] = report.counts.gold;
  counts["sentences"] = report.sentences;
  doc["counts"] = std::move(counts);
  if (include_per_language && !report.per_language.empty()) {
    ordered_json langs;
    for (const auto& [lang, sub] : report.per_language) {
      langs[lang] = report_to_json(sub, false);
    }
    doc["per_language"] = std::move(langs);
  }
  return doc;
}

}  // namespace

std::vector<Span> extract_spans(const std::vector<std::string>& tags) {
  for (const auto& tag : tags) {
    if (!is_valid_tag(tag)) throw InputError("invalid IOB tag '" + tag + "'");
  }
  std::vector<Span> spans;
  const int n = static_cast<int>(tags.size());
  int start = -1;
  std::string open_type;
  for (int i = 0; i < n; ++i) {
    const std::string& tag = tags[static_cast<std::size_t>(i)];
    const std::string type = tag == "O" ? "" : tag_type(tag);
    const bool continues = tag.size() > 1 && tag[0] == 'I' && start >= 0 && type == open_type;
    if (continues) continue;
    if (start >= 0) {
      spans.push_back({open_type, start, i});
      start = -1;
      open_type.clear();
    }
    if (tag != "O") {  // B-x, or a repaired I-x without a valid opener
      start = i;
      open_type = type;
    }
  }
  if (start >= 0) spans.push_back({open_type, start, n});
  return spans;
}

SlotScores slot_scores(const std::vector<std::vector<std::string>>& gold,
                       const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) throw InputError("gold/pred sentence counts differ");
  SlotScores scores;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw InputError("gold/pred tag lengths differ at sentence " + std::to_string(i));
    }
    const std::vector<Span> gs = extract_spans(gold[i]);
    const std::vector<Span> ps = extract_spans(pred[i]);
    scores.counts.gold += static_cast<long>(gs.size());
    scores.counts.predicted += static_cast<long>(ps.size());
    for (const Span& s : ps) {
      if (std::find(gs.begin(), gs.end(), s) != gs.end()) ++scores.counts.true_positives;
    }
  }
  scores.precision = safe_ratio(scores.counts.true_positives, scores.counts.predicted);
  scores.recall = safe_ratio(scores.counts.true_positives, scores.counts.gold);
  const double pr = scores.precision + scores.recall;
  scores.f1 = pr == 0.0 ? 0.0 : 2.0 * scores.precision * scores.recall / pr;
  return scores;
}

double intent_accuracy(const std::vector<std::string>& gold,
                       const std::vector<std::string>& pred) {
  if (gold.empty()) throw InputError("intent accuracy over an empty list");
  if (gold.size() != pred.size()) throw InputError("gold/pred intent counts differ");
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double sentence_accuracy(const std::vector<std::string>& gold_intents,
                         const std::vector<std::vector<std::string>>& gold_tags,
                         const std::vector<std::string>& pred_intents,
                         const std::vector<std::vector<std::string>>& pred_tags,
                         SentenceMatch match) {
  if (gold_intents.size() != gold_tags.size() || gold_intents.size() != pred_intents.size() ||
      gold_intents.size() != pred_tags.size()) {
    throw InputError("sentence accuracy inputs disagree on length");
  }
  if (gold_intents.empty()) throw InputError("sentence accuracy over an empty list");
  long correct = 0;
  for (std::size_t i = 0; i < gold_intents.size(); ++i) {
    if (gold_intents[i] != pred_intents[i]) continue;
    const bool slots_ok = match == SentenceMatch::kSpanEquality
                              ? span_sets_equal(gold_tags[i], pred_tags[i])
                              : gold_tags[i] == pred_tags[i];
    if (slots_ok) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold_intents.size());
}

MetricsReport score_predictions(const std::vector<LabeledExample>& gold,
                                const std::vector<SentencePrediction>& pred,
                                SentenceMatch match) {
  if (gold.size() != pred.size()) throw InputError("gold/pred sentence counts differ");
  if (gold.empty()) throw InputError("cannot score an empty evaluation set");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tags.size() != pred[i].tags.size()) {
      throw InputError("gold/pred tag lengths differ at sentence " + std::to_string(i));
    }
  }
  MetricsReport report = score_flat(gold, pred, match);

  std::set<std::string> languages;
  for (const auto& ex : gold) languages.insert(ex.language);
  if (languages.size() > 1) {
    for (const auto& lang : languages) {
      std::vector<LabeledExample> sub_gold;
      std::vector<SentencePrediction> sub_pred;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i].language != lang) continue;
        sub_gold.push_back(gold[i]);
        sub_pred.push_back(pred[i]);
      }
      report.per_language.emplace(lang, score_flat(sub_gold, sub_pred, match));
    }
  }
  return report;
}

SentencePrediction predict_tokens(const ModelParams& params, const ModelConfig& config,
                                  const Vocabulary& vocab, const LabelMaps& labels,
                                  const std::vector<std::string>& tokens) {
  LabeledExample ex;
  ex.tokens = tokens;
  ex.tags.assign(tokens.size(), "O");
  ex.intent = labels.intents.empty() ? "" : labels.intents.front();
  const EncodedExample enc = encode_example(ex, vocab, labels, config.max_seq_len, false);
  TokenIds ids{enc.ids, enc.attention_mask};
  const HiddenSequence hidden = encoder_forward(ids, params.encoder, config, false, nullptr);
  std::vector<Eigen::Index> word_rows;
  for (Eigen::Index j = 1; j < hidden.rows(); ++j) word_rows.push_back(j);
  const JointPrediction pred = joint_predict(hidden, params.heads, word_rows);
  auto [intent, tags] = decode(pred, labels);
  // Tokens beyond max_seq_len carry no prediction; pad with O.
  while (tags.size() < tokens.size()) tags.emplace_back("O");
  return SentencePrediction{std::move(intent), std::move(tags)};
}

SentencePrediction predict_example(const ModelArchive& archive,
                                   const std::vector<std::string>& tokens) {
  return predict_tokens(archive.params, archive.config, archive.vocab, archive.labels, tokens);
}

MetricsReport evaluate(const ModelArchive& archive, const std::vector<LabeledExample>& test,
                       SentenceMatch match) {
  if (archive.labels.intents.empty()) {
    throw ConfigError("archive has no intent labels; cannot evaluate");
  }
  std::vector<SentencePrediction> preds;
  preds.reserve(test.size());
  for (const auto& ex : test) preds.push_back(predict_example(archive, ex.tokens));
  return score_predictions(test, preds, match);
}

std::string metrics_to_json(const MetricsReport& report, bool include_per_language, int indent) {
  return report_to_json(report, include_per_language).dump(indent);
}

void write_conll(std::ostream& out, const std::vector<LabeledExample>& gold,
                 const std::vector<SentencePrediction>& pred) {
  if (gold.size() != pred.size()) throw InputError("gold/pred sentence counts differ");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < gold[i].tokens.size(); ++j) {
      out << gold[i].tokens[j] << ' ' << gold[i].tags[j] << ' ' << pred[i].tags[j] << '\n';
    }
    out << '\n';
  }
}

}  // namespace jointslu
