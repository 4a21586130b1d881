#include "jointslu/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "jointslu/encoder.hpp"
#include "jointslu/errors.hpp"
#include "jointslu/heads.hpp"
#include "jointslu/metrics.hpp"

namespace jointslu {

namespace {

// Per-head loss weights implied by the training mode.
struct ModeWeights {
  double intent = 0.0;
  double slot = 0.0;
};

ModeWeights mode_weights(TrainMode mode, const LossWeights& weights) {
  switch (mode) {
    case TrainMode::kJoint: return {weights.alpha(), weights.beta()};
    case TrainMode::kIntentOnly: return {1.0, 0.0};
    case TrainMode::kSlotOnly: return {0.0, 1.0};
  }
  throw InternalError("unhandled TrainMode");
}

void validate_batch(const std::vector<EncodedExample>& batch) {
  if (batch.empty()) throw InputError("batch is empty");
  const std::size_t len = batch.front().ids.size();
  for (const EncodedExample& ex : batch) {
    if (ex.ids.size() != len || ex.attention_mask.size() != len ||
        ex.tag_ids.size() != len || ex.loss_mask.size() != len) {
      throw InputError("batch examples are not padded to a common length");
    }
  }
}

struct ExampleLosses {
  double intent = 0.0;
  double slot = 0.0;
};

// Shared forward for loss and gradients; h rows 1..m-1 feed the slot head.
ExampleLosses example_losses(const EncodedExample& ex, const Matrix& hidden,
                             const HeadParams& heads) {
  const Eigen::Index m = hidden.rows();
  ExampleLosses out;
  out.intent = intent_cross_entropy(intent_logits(hidden.row(0).transpose(), heads),
                                    ex.intent_id);
  const Matrix words = hidden.bottomRows(m - 1);
  const std::vector<int> gold(ex.tag_ids.begin() + 1, ex.tag_ids.end());
  const std::vector<std::uint8_t> mask(ex.loss_mask.begin() + 1, ex.loss_mask.end());
  out.slot = slot_cross_entropy(slot_logits(words, heads), gold, mask);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
}

OptimizerState OptimizerState::make(const std::vector<TensorRef>& refs) {
  OptimizerState state;
  state.first_moment.reserve(refs.size());
  state.second_moment.reserve(refs.size());
  for (const TensorRef& ref : refs) {
    state.first_moment.push_back(Vector::Zero(ref.size));
    state.second_moment.push_back(Vector::Zero(ref.size));
  }
  return state;
}

void adam_step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
               OptimizerState& state, const TrainConfig& config) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw InternalError("optimizer tensor counts disagree");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const TensorRef& p = params[i];
    const TensorRef& g = grads[i];
    if (p.size != g.size || p.shape != g.shape) {
      throw InternalError("gradient shape mismatch for " + p.name);
    }
    if (!p.trainable) continue;
    Eigen::Map<Vector> value(p.data, p.size);
    Eigen::Map<const Vector> grad(g.data, g.size);
    Vector& m = state.first_moment[i];
    Vector& v = state.second_moment[i];
    m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad;
    v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * grad.cwiseProduct(grad);
    Vector update = (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + config.adam_epsilon)
                                                .matrix());
    if (p.weight_decay && config.weight_decay > 0.0) {
      update += config.weight_decay * value;
    }
    value -= config.learning_rate * update;
  }
}

std::vector<EncodedExample> pad_batch(std::vector<EncodedExample> batch) {
  std::size_t longest = 0;
  for (const EncodedExample& ex : batch) longest = std::max(longest, ex.ids.size());
  for (EncodedExample& ex : batch) {
    while (ex.ids.size() < longest) {
      ex.ids.push_back(kPadId);
      ex.attention_mask.push_back(0);
      ex.tag_ids.push_back(-1);
      ex.loss_mask.push_back(0);
    }
  }
  return batch;
}

BatchGradients compute_gradients(const std::vector<EncodedExample>& batch,
                                 const ModelParams& params, const ModelConfig& config,
                                 TrainMode mode, std::mt19937_64* dropout_rng) {
  validate_batch(batch);
  const bool use_dropout = dropout_rng != nullptr && config.dropout_keep < 1.0;
  const ModeWeights w = mode_weights(mode, params.loss_weights);

  BatchGradients out;
  out.grads = zeros_like(params);
  double sum_intent = 0.0, sum_slot = 0.0;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EncodedExample& ex = batch[i];
    const TokenIds ids{ex.ids, ex.attention_mask};
    const EncoderCache cache = encoder_forward_cached(ids, params.encoder, config,
                                                      dropout_rng != nullptr, dropout_rng);
    Matrix hidden = cache.final_hidden();
    const Eigen::Index m = hidden.rows();
    const Eigen::Index h = hidden.cols();

    Matrix drop;
    if (use_dropout) {
      drop = dropout_mask(m, h, config.dropout_keep, *dropout_rng);
      hidden = hidden.cwiseProduct(drop);
    }

    const ExampleLosses losses = example_losses(ex, hidden, params.heads);
    if (!std::isfinite(losses.intent) || !std::isfinite(losses.slot)) {
      throw NumericError("non-finite loss at batch example " + std::to_string(i));
    }
    sum_intent += losses.intent;
    sum_slot += losses.slot;

    Matrix d_hidden = Matrix::Zero(m, h);
    if (w.intent != 0.0) {
      const Vector h0 = hidden.row(0).transpose();
      const Vector z = intent_logits(h0, params.heads);
      Vector dz = softmax(z);
      dz(ex.intent_id) -= 1.0;
      dz *= w.intent;
      out.grads.heads.w_intent += dz * h0.transpose();
      out.grads.heads.b_intent += dz;
      d_hidden.row(0) += (params.heads.w_intent.transpose() * dz).transpose();
    }
    if (w.slot != 0.0) {
      const Matrix words = hidden.bottomRows(m - 1);
      const Matrix z = slot_logits(words, params.heads);
      int unmasked = 0;
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        if (ex.loss_mask[static_cast<std::size_t>(r + 1)]) ++unmasked;
      }
      Matrix dz = Matrix::Zero(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        if (!ex.loss_mask[static_cast<std::size_t>(r + 1)]) continue;
        Vector p = softmax(z.row(r).transpose());
        p(ex.tag_ids[static_cast<std::size_t>(r + 1)]) -= 1.0;
        dz.row(r) = p.transpose() * (w.slot / static_cast<double>(unmasked));
      }
      out.grads.heads.w_slot += dz.transpose() * words;
      out.grads.heads.b_slot += dz.colwise().sum().transpose();
      d_hidden.bottomRows(m - 1) += dz * params.heads.w_slot;
    }
    if (use_dropout) d_hidden = d_hidden.cwiseProduct(drop);
    encoder_backward(cache, d_hidden, params.encoder, config, out.grads.encoder);
  }

  const double n = static_cast<double>(batch.size());
  for (TensorRef& ref : enumerate_tensors(out.grads)) {
    for (Eigen::Index e = 0; e < ref.size; ++e) ref.data[e] /= n;
  }
  out.intent_loss = sum_intent / n;
  out.slot_loss = sum_slot / n;
  switch (mode) {
    case TrainMode::kJoint: {
      out.loss = joint_loss(out.intent_loss, out.slot_loss, params.loss_weights);
      // alpha = 2*sa, beta = 2*sb with (sa, sb) = softmax(a, b);
      // dL/da = 2*sa*sb*(L_c - L_s), dL/db is its negative.
      const double sa = params.loss_weights.alpha() / 2.0;
      const double sb = params.loss_weights.beta() / 2.0;
      const double g = 2.0 * sa * sb * (out.intent_loss - out.slot_loss);
      out.grads.loss_weights.a = g;
      out.grads.loss_weights.b = -g;
      break;
    }
    case TrainMode::kIntentOnly: out.loss = out.intent_loss; break;
    case TrainMode::kSlotOnly: out.loss = out.slot_loss; break;
  }
  return out;
}

double compute_loss(const std::vector<EncodedExample>& batch, const ModelParams& params,
                    const ModelConfig& config, TrainMode mode) {
  validate_batch(batch);
  double sum_intent = 0.0, sum_slot = 0.0;
  for (const EncodedExample& ex : batch) {
    const TokenIds ids{ex.ids, ex.attention_mask};
    const HiddenSequence hidden = encoder_forward(ids, params.encoder, config, false, nullptr);
    const ExampleLosses losses = example_losses(ex, hidden, params.heads);
    sum_intent += losses.intent;
    sum_slot += losses.slot;
  }
  const double n = static_cast<double>(batch.size());
  switch (mode) {
    case TrainMode::kJoint: return joint_loss(sum_intent / n, sum_slot / n, params.loss_weights);
    case TrainMode::kIntentOnly: return sum_intent / n;
    case TrainMode::kSlotOnly: return sum_slot / n;
  }
  throw InternalError("unhandled TrainMode");
}

TrainResult train(const DatasetSplit& data, ModelConfig model_config,
                  const TrainConfig& train_config, bool lowercase,
                  const EncoderParams* init_encoder, const Vocabulary* fixed_vocab,
                  const EpochCallback& on_epoch, const StepObserver& on_step) {
  if (data.train.empty()) throw InputError("train set is empty");
  if (data.valid.empty()) throw InputError("validation set is empty");
  train_config.validate();

  const LabelMaps maps = build_label_maps(data.train);
  for (const LabeledExample& ex : data.valid) {
    if (maps.intent_index(ex.intent) < 0) {
      throw InputError("validation example has unknown intent label '" + ex.intent + "'");
    }
  }
  const Vocabulary vocab =
      fixed_vocab != nullptr ? *fixed_vocab : Vocabulary::build(data.train, lowercase);
  model_config.vocab_size = vocab.size();
  model_config.validate();

  ModelParams params =
      init_params(model_config, static_cast<int>(maps.intents.size()),
                  static_cast<int>(maps.slot_tags.size()), derive_seed(train_config.seed, 0));
  if (init_encoder != nullptr) {
    if (init_encoder->token_embeddings.rows() != params.encoder.token_embeddings.rows() ||
        init_encoder->token_embeddings.cols() != params.encoder.token_embeddings.cols() ||
        init_encoder->position_embeddings.rows() != params.encoder.position_embeddings.rows() ||
        init_encoder->layers.size() != params.encoder.layers.size()) {
      throw ConfigError("warm-start encoder shapes do not match the model config");
    }
    params.encoder = *init_encoder;
  }

  TrainLog log;
  EncodeStats stats;
  std::vector<EncodedExample> encoded;
  encoded.reserve(data.train.size());
  for (const LabeledExample& ex : data.train) {
    encoded.push_back(
        encode_example(ex, vocab, maps, model_config.max_seq_len, true, &stats));
  }
  log.truncated_examples = stats.truncated;

  const std::vector<TensorRef> param_refs = enumerate_tensors(params, train_config.mode);
  OptimizerState state = OptimizerState::make(param_refs);
  std::mt19937_64 shuffle_rng(derive_seed(train_config.seed, 1));
  std::mt19937_64 dropout_rng(derive_seed(train_config.seed, 2));
  std::mt19937_64* dropout = model_config.dropout_keep < 1.0 ? &dropout_rng : nullptr;

  ModelParams best_params = params;
  double best_sentence_accuracy = -1.0;
  long step = 0;

  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0, intent_sum = 0.0, slot_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(train_config.batch_size));
      std::vector<EncodedExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(encoded[order[i]]);
      batch = pad_batch(std::move(batch));

      BatchGradients bg =
          compute_gradients(batch, params, model_config, train_config.mode, dropout);
      adam_step(param_refs, enumerate_tensors(bg.grads, train_config.mode), state, train_config);
      ++step;
      if (on_step) on_step(step, params);

      const double n = static_cast<double>(batch.size());
      loss_sum += bg.loss * n;
      intent_sum += bg.intent_loss * n;
      slot_sum += bg.slot_loss * n;
    }

    std::vector<SentencePrediction> preds;
    preds.reserve(data.valid.size());
    for (const LabeledExample& ex : data.valid) {
      preds.push_back(predict_tokens(params, model_config, vocab, maps, ex.tokens));
    }
    const MetricsReport report = score_predictions(data.valid, preds);

    EpochRecord record;
    record.epoch = epoch;
    const double n_train = static_cast<double>(encoded.size());
    record.mean_loss = loss_sum / n_train;
    record.mean_intent_loss = intent_sum / n_train;
    record.mean_slot_loss = slot_sum / n_train;
    record.alpha = params.loss_weights.alpha();
    record.beta = params.loss_weights.beta();
    record.val_intent_accuracy = report.intent_accuracy;
    record.val_slot_f1 = report.slot_f1;
    record.val_sentence_accuracy = report.sentence_accuracy;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (report.sentence_accuracy > best_sentence_accuracy) {
      best_sentence_accuracy = report.sentence_accuracy;
      best_params = params;
      log.best_epoch = epoch;
    }
  }

  TrainResult result;
  result.archive = ModelArchive{model_config, vocab, maps, std::move(best_params)};
  result.log = std::move(log);
  return result;
}

std::vector<std::size_t> select_mlm_positions(std::size_t num_words, double mask_fraction,
                                              std::mt19937_64& rng) {
  if (num_words == 0) throw InputError("cannot select mask positions in an empty sentence");
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(num_words) * mask_fraction));
  std::vector<std::size_t> positions(num_words);
  std::iota(positions.begin(), positions.end(), 0);
  std::shuffle(positions.begin(), positions.end(), rng);
  positions.resize(k);
  std::sort(positions.begin(), positions.end());
  return positions;
}

PretrainResult pretrain_mlm(const std::vector<std::vector<std::string>>& corpus,
                            ModelConfig config, const TrainConfig& train_config,
                            double mask_fraction, bool lowercase,
                            const EpochCallback& on_epoch) {
  if (corpus.empty()) throw InputError("pretraining corpus is empty");
  train_config.validate();
  if (!(mask_fraction > 0.0 && mask_fraction <= 1.0)) {
    throw InputError("mask_fraction must be in (0, 1]");
  }

  std::vector<LabeledExample> pseudo;
  pseudo.reserve(corpus.size());
  for (const auto& sentence : corpus) {
    if (sentence.empty()) throw InputError("pretraining corpus contains an empty sentence");
    LabeledExample ex;
    ex.tokens = sentence;
    ex.tags.assign(sentence.size(), "O");
    ex.intent = "none";
    pseudo.push_back(std::move(ex));
  }
  const Vocabulary vocab = Vocabulary::build(pseudo, lowercase);
  config.vocab_size = vocab.size();
  config.validate();

  ModelParams params = init_params(config, 0, 0, derive_seed(train_config.seed, 0));
  Vector mlm_bias = Vector::Zero(config.vocab_size);

  const LabelMaps empty_maps{{}, {"O"}};
  std::vector<EncodedExample> encoded;
  encoded.reserve(pseudo.size());
  for (const auto& ex : pseudo) {
    encoded.push_back(encode_example(ex, vocab, empty_maps, config.max_seq_len, false));
  }

  std::vector<TensorRef> param_refs = enumerate_encoder_tensors(params.encoder);
  param_refs.push_back(TensorRef{"mlm_bias", mlm_bias.data(), {mlm_bias.size()},
                                 mlm_bias.size(), false, true});
  OptimizerState state = OptimizerState::make(param_refs);
  std::mt19937_64 shuffle_rng(derive_seed(train_config.seed, 1));
  std::mt19937_64 mask_rng(derive_seed(train_config.seed, 2));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<int> random_token(4, config.vocab_size - 1);

  PretrainResult result;
  result.vocab = vocab;

  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  bool first_batch = true;

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    long epoch_positions = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(train_config.batch_size));

      struct MaskedExample {
        EncodedExample corrupted;
        std::vector<std::size_t> rows;   // absolute rows carrying MLM loss
        std::vector<int> original_ids;
      };
      std::vector<MaskedExample> masked;
      long total_selected = 0;
      for (std::size_t i = start; i < end; ++i) {
        const EncodedExample& ex = encoded[order[i]];
        MaskedExample me;
        me.corrupted = ex;
        const std::size_t num_words = ex.ids.size() - 1;
        for (std::size_t pos : select_mlm_positions(num_words, mask_fraction, mask_rng)) {
          const std::size_t row = pos + 1;  // skip the sequence-start row
          me.rows.push_back(row);
          me.original_ids.push_back(ex.ids[row]);
          const double u = uniform(mask_rng);
          if (u < 0.8) {
            me.corrupted.ids[row] = kMaskTokenId;
          } else if (u < 0.9) {
            me.corrupted.ids[row] = random_token(mask_rng);
          }
        }
        total_selected += static_cast<long>(me.rows.size());
        masked.push_back(std::move(me));
      }

      ModelParams grads = zeros_like(params);
      Vector bias_grad = Vector::Zero(config.vocab_size);
      double batch_loss = 0.0;
      for (const MaskedExample& me : masked) {
        const TokenIds ids{me.corrupted.ids, me.corrupted.attention_mask};
        const EncoderCache cache =
            encoder_forward_cached(ids, params.encoder, config, false, nullptr);
        const Matrix& hidden = cache.final_hidden();
        Matrix d_hidden = Matrix::Zero(hidden.rows(), hidden.cols());
        for (std::size_t s = 0; s < me.rows.size(); ++s) {
          const Eigen::Index row = static_cast<Eigen::Index>(me.rows[s]);
          const Vector h = hidden.row(row).transpose();
          const Vector logits = params.encoder.token_embeddings * h + mlm_bias;
          batch_loss += intent_cross_entropy(logits, me.original_ids[s]);
          Vector dz = softmax(logits);
          dz(me.original_ids[s]) -= 1.0;
          dz /= static_cast<double>(total_selected);
          grads.encoder.token_embeddings += dz * h.transpose();
          bias_grad += dz;
          d_hidden.row(row) +=
              (params.encoder.token_embeddings.transpose() * dz).transpose();
        }
        encoder_backward(cache, d_hidden, params.encoder, config, grads.encoder);
      }
      if (!std::isfinite(batch_loss)) throw NumericError("non-finite MLM loss");
      const double mean_loss = batch_loss / static_cast<double>(total_selected);
      if (first_batch) {
        result.first_batch_loss = mean_loss;
        first_batch = false;
      }
      epoch_loss += batch_loss;
      epoch_positions += total_selected;

      std::vector<TensorRef> grad_refs = enumerate_encoder_tensors(grads.encoder);
      grad_refs.push_back(TensorRef{"mlm_bias", bias_grad.data(), {bias_grad.size()},
                                    bias_grad.size(), false, true});
      adam_step(param_refs, grad_refs, state, train_config);
    }

    result.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_positions));
    if (on_epoch) {
      EpochRecord record;
      record.epoch = epoch;
      record.mean_loss = result.epoch_losses.back();
      on_epoch(record);
    }
  }

  result.config = config;
  result.encoder = std::move(params.encoder);
  return result;
}

GradientCheckReport gradient_check(const ModelConfig& config_in, double tolerance,
                                   int num_intents, int num_slot_tags, std::uint64_t seed,
                                   const std::string& corrupt_tensor, double corrupt_factor) {
  ModelConfig config = config_in;
  if (config.vocab_size < 6) config.vocab_size = 12;
  config.dropout_keep = 1.0;
  config.internal_dropout = false;
  config.validate();

  ModelParams params = init_params(config, num_intents, num_slot_tags, derive_seed(seed, 0));
  // Move the loss weights off the symmetric point so both simplex gradients
  // are exercised.
  params.loss_weights.a = 0.25;
  params.loss_weights.b = -0.15;

  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_int_distribution<int> token(4, config.vocab_size - 1);
  std::uniform_int_distribution<int> tag(0, num_slot_tags - 1);
  std::uniform_int_distribution<int> intent(0, num_intents - 1);
  std::vector<EncodedExample> batch;
  for (int e = 0; e < 2; ++e) {
    EncodedExample ex;
    ex.ids = {kSeqStartId, token(rng), token(rng), token(rng)};
    ex.attention_mask = {1, 1, 1, 1};
    ex.tag_ids = {-1, tag(rng), tag(rng), tag(rng)};
    ex.loss_mask = {0, 1, 1, 1};
    ex.intent_id = intent(rng);
    batch.push_back(std::move(ex));
  }

  BatchGradients analytic = compute_gradients(batch, params, config, TrainMode::kJoint, nullptr);
  std::vector<TensorRef> grad_refs = enumerate_tensors(analytic.grads);
  if (!corrupt_tensor.empty()) {
    for (TensorRef& ref : grad_refs) {
      if (ref.name != corrupt_tensor) continue;
      for (Eigen::Index i = 0; i < ref.size; ++i) ref.data[i] *= corrupt_factor;
    }
  }

  GradientCheckReport report;
  report.tolerance = tolerance;
  const double h = 1e-4;
  std::vector<TensorRef> param_refs = enumerate_tensors(params);
  for (std::size_t ti = 0; ti < param_refs.size(); ++ti) {
    const TensorRef& p = param_refs[ti];
    const TensorRef& g = grad_refs[ti];
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size; ++i) {
      const double original = p.data[i];
      p.data[i] = original + h;
      const double up = compute_loss(batch, params, config, TrainMode::kJoint);
      p.data[i] = original - h;
      const double down = compute_loss(batch, params, config, TrainMode::kJoint);
      p.data[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::abs(g.data[i] - numeric) /
                         std::max({1e-3, std::abs(g.data[i]), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
    report.tensors.push_back({p.name, worst});
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace jointslu
