#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "jointslu/encoder.hpp"
#include "jointslu/params.hpp"

namespace jointslu {

struct LabelMaps {
  std::vector<std::string> intents;
  std::vector<std::string> slot_tags;  // always contains "O"

  // -1 when the name is absent.
  int intent_index(const std::string& name) const;
  int slot_index(const std::string& name) const;
};

struct JointPrediction {
  Vector intent_probs;  // |C|
  Matrix slot_probs;    // n x |O|, one row per word position
  int intent = 0;
  std::vector<int> tags;
};

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

// Lowest index wins on exact ties.
int argmax_lowest(const Vector& values);

Vector intent_logits(const Vector& h0, const HeadParams& heads);
// softmax(h0 * W_c^T + b_c); throws NumericError on non-finite input.
Vector intent_probs(const Vector& h0, const HeadParams& heads);

Matrix slot_logits(const Matrix& h_words, const HeadParams& heads);
// Per-row softmax(h_j * W_o^T + b_o); n = 0 yields an empty matrix.
Matrix slot_probs(const Matrix& h_words, const HeadParams& heads);

// word_rows selects the hidden rows classified by the slot head (the real word
// positions); row 0 always feeds the intent head.
JointPrediction joint_predict(const HiddenSequence& hidden, const HeadParams& heads,
                              const std::vector<Eigen::Index>& word_rows);

std::pair<std::string, std::vector<std::string>> decode(const JointPrediction& pred,
                                                        const LabelMaps& maps);

// -log softmax(logits)[gold]; computed in log space.
double intent_cross_entropy(const Vector& logits, int gold_intent);

// Mean of -log softmax(logits_j)[gold_j] over unmasked rows; masked rows
// contribute nothing. Throws InputError when every row is masked.
double slot_cross_entropy(const Matrix& logits, const std::vector<int>& gold_tags,
                          const std::vector<std::uint8_t>& loss_mask);

// alpha * intent_loss + beta * slot_loss.
double joint_loss(double intent_loss, double slot_loss, const LossWeights& weights);

}  // namespace jointslu
