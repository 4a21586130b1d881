#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jointslu/archive.hpp"
#include "jointslu/config.hpp"
#include "jointslu/data.hpp"
#include "jointslu/params.hpp"

namespace jointslu {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 1e-3;  // desk-scale default; fine-tuning setups go lower
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;  // decoupled; weight matrices only
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kJoint;

  void validate() const;
};

// Adam moments per tensor, aligned with the enumerate_tensors() order.
struct OptimizerState {
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  long t = 0;

  static OptimizerState make(const std::vector<TensorRef>& refs);
};

// One Adam step with bias correction; decoupled weight decay applies to weight
// matrices only. Tensors frozen by the train mode are left untouched.
void adam_step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
               OptimizerState& state, const TrainConfig& config);

// Pads a batch to its longest sequence: pad id, attention 0, loss mask 0.
std::vector<EncodedExample> pad_batch(std::vector<EncodedExample> batch);

struct BatchGradients {
  double loss = 0.0;         // the optimized objective, batch mean
  double intent_loss = 0.0;  // batch-mean L_c (always computed)
  double slot_loss = 0.0;    // batch-mean L_s (always computed)
  ModelParams grads;
};

// Batch-mean loss and exact analytic gradients for every trainable tensor.
// dropout_rng enables final-hidden-state dropout (keep prob from the config);
// pass nullptr for a deterministic pass.
BatchGradients compute_gradients(const std::vector<EncodedExample>& batch,
                                 const ModelParams& params, const ModelConfig& config,
                                 TrainMode mode, std::mt19937_64* dropout_rng);

// Forward-only objective on the same path compute_gradients differentiates.
double compute_loss(const std::vector<EncodedExample>& batch, const ModelParams& params,
                    const ModelConfig& config, TrainMode mode);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_intent_loss = 0.0;
  double mean_slot_loss = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double val_intent_accuracy = 0.0;
  double val_slot_f1 = 0.0;
  double val_sentence_accuracy = 0.0;
  double seconds = 0.0;  // wall clock; kept out of serialized logs so runs stay byte-comparable
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  long truncated_examples = 0;
  int best_epoch = 0;  // 1-based epoch whose weights the archive carries
};

struct TrainResult {
  ModelArchive archive;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;
using StepObserver = std::function<void(long step, const ModelParams&)>;

// Full fine-tuning loop: shuffled minibatches of compute_gradients + adam_step,
// validation after every epoch, archive of the epoch with the best validation
// sentence accuracy (ties keep the earliest). Deterministic given the seed.
TrainResult train(const DatasetSplit& data, ModelConfig model_config,
                  const TrainConfig& train_config, bool lowercase = false,
                  const EncoderParams* init_encoder = nullptr,
                  const Vocabulary* fixed_vocab = nullptr, const EpochCallback& on_epoch = {},
                  const StepObserver& on_step = {});

// Masked-language-model warm start. Of the selected positions 80% become the
// mask token, 10% a random real token, 10% stay unchanged; the output softmax
// is tied to the token embeddings.
struct PretrainResult {
  ModelConfig config;
  Vocabulary vocab;
  EncoderParams encoder;
  double first_batch_loss = 0.0;
  std::vector<double> epoch_losses;
};

PretrainResult pretrain_mlm(const std::vector<std::vector<std::string>>& corpus,
                            ModelConfig config, const TrainConfig& train_config,
                            double mask_fraction = 0.15, bool lowercase = false,
                            const EpochCallback& on_epoch = {});

// max(1, floor(num_words * fraction)) distinct positions in [0, num_words).
std::vector<std::size_t> select_mlm_positions(std::size_t num_words, double mask_fraction,
                                              std::mt19937_64& rng);

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradientCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Central finite differences (step 1e-4) against the analytic gradients on a
// small randomized batch, dropout off. corrupt_tensor scales one analytic
// gradient tensor to verify the check catches injected faults.
GradientCheckReport gradient_check(const ModelConfig& config, double tolerance,
                                   int num_intents = 3, int num_slot_tags = 5,
                                   std::uint64_t seed = 42,
                                   const std::string& corrupt_tensor = {},
                                   double corrupt_factor = 1.0);

}  // namespace jointslu
