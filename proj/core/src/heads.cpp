#include "jointslu/heads.hpp"

#include <algorithm>
#include <cmath>

#include "jointslu/errors.hpp"

namespace jointslu {

int LabelMaps::intent_index(const std::string& name) const {
  auto it = std::find(intents.begin(), intents.end(), name);
  return it == intents.end() ? -1 : static_cast<int>(it - intents.begin());
}

int LabelMaps::slot_index(const std::string& name) const {
  auto it = std::find(slot_tags.begin(), slot_tags.end(), name);
  return it == slot_tags.end() ? -1 : static_cast<int>(it - slot_tags.begin());
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector out = (logits.array() - m).exp();
  return out / out.sum();
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

int argmax_lowest(const Vector& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

Vector intent_logits(const Vector& h0, const HeadParams& heads) {
  if (!h0.allFinite()) throw NumericError("intent head input contains NaN or Inf");
  return heads.w_intent * h0 + heads.b_intent;
}

Vector intent_probs(const Vector& h0, const HeadParams& heads) {
  return softmax(intent_logits(h0, heads));
}

Matrix slot_logits(const Matrix& h_words, const HeadParams& heads) {
  if (!h_words.allFinite()) throw NumericError("slot head input contains NaN or Inf");
  Matrix logits = h_words * heads.w_slot.transpose();
  logits.rowwise() += heads.b_slot.transpose();
  return logits;
}

Matrix slot_probs(const Matrix& h_words, const HeadParams& heads) {
  Matrix logits = slot_logits(h_words, heads);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

JointPrediction joint_predict(const HiddenSequence& hidden, const HeadParams& heads,
                              const std::vector<Eigen::Index>& word_rows) {
  JointPrediction pred;
  pred.intent_probs = intent_probs(hidden.row(0).transpose(), heads);
  pred.intent = argmax_lowest(pred.intent_probs);

  Matrix h_words(static_cast<Eigen::Index>(word_rows.size()), hidden.cols());
  for (std::size_t i = 0; i < word_rows.size(); ++i) {
    h_words.row(static_cast<Eigen::Index>(i)) = hidden.row(word_rows[i]);
  }
  pred.slot_probs = slot_probs(h_words, heads);
  pred.tags.resize(word_rows.size());
  for (Eigen::Index i = 0; i < pred.slot_probs.rows(); ++i) {
    pred.tags[static_cast<std::size_t>(i)] = argmax_lowest(pred.slot_probs.row(i).transpose());
  }
  return pred;
}

std::pair<std::string, std::vector<std::string>> decode(const JointPrediction& pred,
                                                        const LabelMaps& maps) {
  if (pred.intent < 0 || pred.intent >= static_cast<int>(maps.intents.size())) {
    throw InternalError("predicted intent index out of label map range");
  }
  std::vector<std::string> tags;
  tags.reserve(pred.tags.size());
  for (int t : pred.tags) {
    if (t < 0 || t >= static_cast<int>(maps.slot_tags.size())) {
      throw InternalError("predicted tag index out of label map range");
    }
    tags.push_back(maps.slot_tags[static_cast<std::size_t>(t)]);
  }
  return {maps.intents[static_cast<std::size_t>(pred.intent)], std::move(tags)};
}

double intent_cross_entropy(const Vector& logits, int gold_intent) {
  if (gold_intent < 0 || gold_intent >= logits.size()) {
    throw InputError("gold intent index out of range");
  }
  return -log_softmax(logits)(gold_intent);
}

double slot_cross_entropy(const Matrix& logits, const std::vector<int>& gold_tags,
                          const std::vector<std::uint8_t>& loss_mask) {
  if (static_cast<Eigen::Index>(gold_tags.size()) != logits.rows() ||
      gold_tags.size() != loss_mask.size()) {
    throw InputError("slot loss inputs disagree on length");
  }
  double total = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!loss_mask[static_cast<std::size_t>(i)]) continue;
    const int gold = gold_tags[static_cast<std::size_t>(i)];
    if (gold < 0 || gold >= logits.cols()) throw InputError("gold tag index out of range");
    total += -log_softmax(logits.row(i).transpose())(gold);
    ++count;
  }
  if (count == 0) throw InputError("slot loss needs at least one unmasked position");
  return total / static_cast<double>(count);
}

double joint_loss(double intent_loss, double slot_loss, const LossWeights& weights) {
  return weights.alpha() * intent_loss + weights.beta() * slot_loss;
}

}  // namespace jointslu
