#include <doctest.h>

#include <cmath>
#include <random>

#include "jointslu/errors.hpp"
#include "jointslu/metrics.hpp"
#include "jointslu/synthetic.hpp"
#include "jointslu/trainer.hpp"

using namespace jointslu;

namespace {

ModelConfig tiny_config() {
  ModelConfig config;
  config.num_layers = 1;
  config.hidden_size = 16;
  config.num_heads = 2;
  config.ffn_size = 32;
  config.vocab_size = 12;
  config.max_seq_len = 8;
  config.dropout_keep = 1.0;
  return config;
}

std::vector<EncodedExample> tiny_batch(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> token(4, 11);
  std::vector<EncodedExample> batch;
  for (int e = 0; e < 2; ++e) {
    EncodedExample ex;
    ex.ids = {0, token(rng), token(rng), token(rng)};
    ex.attention_mask = {1, 1, 1, 1};
    ex.tag_ids = {-1, static_cast<int>(rng() % 5), static_cast<int>(rng() % 5),
                  static_cast<int>(rng() % 5)};
    ex.loss_mask = {0, 1, 1, 1};
    ex.intent_id = static_cast<int>(rng() % 3);
    batch.push_back(std::move(ex));
  }
  return batch;
}

bool tensors_equal(ModelParams& a, ModelParams& b) {
  const auto refs_a = enumerate_tensors(a);
  const auto refs_b = enumerate_tensors(b);
  for (std::size_t i = 0; i < refs_a.size(); ++i) {
    for (Eigen::Index e = 0; e < refs_a[i].size; ++e) {
      if (refs_a[i].data[e] != refs_b[i].data[e]) return false;
    }
  }
  return true;
}

DatasetSplit memorization_set(int size) {
  const DatasetSplit synth = make_synthetic_corpus();
  DatasetSplit data;
  data.train.assign(synth.train.begin(), synth.train.begin() + size);
  data.valid = data.train;
  data.test = data.train;
  return data;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("intent-only mode leaves the slot head without gradient") {
  const ModelConfig config = tiny_config();
  const ModelParams params = init_params(config, 3, 5, 2);
  const BatchGradients bg =
      compute_gradients(tiny_batch(1), params, config, TrainMode::kIntentOnly, nullptr);
  CHECK(bg.grads.heads.w_slot.isZero(0.0));
  CHECK(bg.grads.heads.b_slot.isZero(0.0));
  CHECK(bg.grads.loss_weights.a == 0.0);
  CHECK_FALSE(bg.grads.heads.w_intent.isZero(0.0));
}

TEST_CASE("slot-only mode leaves the intent head without gradient") {
  const ModelConfig config = tiny_config();
  const ModelParams params = init_params(config, 3, 5, 2);
  const BatchGradients bg =
      compute_gradients(tiny_batch(1), params, config, TrainMode::kSlotOnly, nullptr);
  CHECK(bg.grads.heads.w_intent.isZero(0.0));
  CHECK(bg.grads.heads.b_intent.isZero(0.0));
  CHECK_FALSE(bg.grads.heads.w_slot.isZero(0.0));
}

TEST_CASE("duplicating every example leaves mean loss and gradients unchanged") {
  const ModelConfig config = tiny_config();
  const ModelParams params = init_params(config, 3, 5, 4);
  const std::vector<EncodedExample> batch = tiny_batch(3);
  std::vector<EncodedExample> doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());

  BatchGradients a = compute_gradients(batch, params, config, TrainMode::kJoint, nullptr);
  BatchGradients b = compute_gradients(doubled, params, config, TrainMode::kJoint, nullptr);
  CHECK(std::abs(a.loss - b.loss) <= 1e-12);
  const auto refs_a = enumerate_tensors(a.grads);
  const auto refs_b = enumerate_tensors(b.grads);
  for (std::size_t i = 0; i < refs_a.size(); ++i) {
    for (Eigen::Index e = 0; e < refs_a[i].size; ++e) {
      CHECK(std::abs(refs_a[i].data[e] - refs_b[i].data[e]) <= 1e-12);
    }
  }
}

TEST_CASE("non-finite loss reports the offending example") {
  const ModelConfig config = tiny_config();
  ModelParams params = init_params(config, 3, 5, 4);
  params.heads.w_intent(0, 0) = std::nan("");
  CHECK_THROWS_AS(compute_gradients(tiny_batch(9), params, config, TrainMode::kJoint, nullptr),
                  NumericError);
}

TEST_CASE("adam with zero gradient and no decay is a null update") {
  const ModelConfig config = tiny_config();
  ModelParams params = init_params(config, 3, 5, 6);
  ModelParams snapshot = params;
  ModelParams grads = zeros_like(params);
  TrainConfig tc;
  tc.weight_decay = 0.0;
  const auto refs = enumerate_tensors(params);
  OptimizerState state = OptimizerState::make(refs);
  adam_step(refs, enumerate_tensors(grads), state, tc);
  CHECK(state.t == 1);
  CHECK(tensors_equal(params, snapshot));
}

TEST_CASE("first adam step with unit gradients moves by lr/(1+eps)") {
  const ModelConfig config = tiny_config();
  ModelParams params = init_params(config, 3, 5, 6);
  ModelParams snapshot = params;
  ModelParams grads = zeros_like(params);
  for (TensorRef& ref : enumerate_tensors(grads)) {
    for (Eigen::Index e = 0; e < ref.size; ++e) ref.data[e] = 1.0;
  }
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.adam_epsilon = 1e-8;
  tc.weight_decay = 0.0;
  const auto refs = enumerate_tensors(params);
  OptimizerState state = OptimizerState::make(refs);
  adam_step(refs, enumerate_tensors(grads), state, tc);
  // closed form: mhat = vhat = 1, so each entry decreases by lr / (1 + eps)
  const double expected = 1e-3 / (1.0 + 1e-8);
  const auto old_refs = enumerate_tensors(snapshot);
  const auto new_refs = enumerate_tensors(params);
  for (std::size_t i = 0; i < new_refs.size(); ++i) {
    for (Eigen::Index e = 0; e < new_refs[i].size; ++e) {
      CHECK(old_refs[i].data[e] - new_refs[i].data[e] ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("decoupled decay scales weight matrices and spares everything else") {
  const ModelConfig config = tiny_config();
  ModelParams params = init_params(config, 3, 5, 8);
  params.loss_weights.a = 0.4;
  ModelParams snapshot = params;
  ModelParams grads = zeros_like(params);
  TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.weight_decay = 0.01;
  const auto refs = enumerate_tensors(params);
  OptimizerState state = OptimizerState::make(refs);
  adam_step(refs, enumerate_tensors(grads), state, tc);
  const auto old_refs = enumerate_tensors(snapshot);
  const auto new_refs = enumerate_tensors(params);
  for (std::size_t i = 0; i < new_refs.size(); ++i) {
    for (Eigen::Index e = 0; e < new_refs[i].size; ++e) {
      const double expected = new_refs[i].weight_decay
                                  ? old_refs[i].data[e] * (1.0 - 0.001)
                                  : old_refs[i].data[e];
      CHECK(new_refs[i].data[e] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam has no state outside OptimizerState") {
  const ModelConfig config = tiny_config();
  ModelParams params_a = init_params(config, 3, 5, 12);
  ModelParams params_b = params_a;
  ModelParams grads = init_params(config, 3, 5, 13);  // arbitrary nonzero gradients
  TrainConfig tc;
  const auto refs_a = enumerate_tensors(params_a);
  const auto refs_b = enumerate_tensors(params_b);
  OptimizerState state_a = OptimizerState::make(refs_a);
  OptimizerState state_b = OptimizerState::make(refs_b);
  adam_step(refs_a, enumerate_tensors(grads), state_a, tc);
  adam_step(refs_b, enumerate_tensors(grads), state_b, tc);
  CHECK(tensors_equal(params_a, params_b));
  CHECK(state_a.t == state_b.t);
}

TEST_CASE("gradient check passes at 1e-4 on the small config") {
  const GradientCheckReport report = gradient_check(tiny_config(), 1e-4);
  CHECK(report.passed);
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("a corrupted intent-head gradient is flagged and nothing else") {
  const GradientCheckReport report =
      gradient_check(tiny_config(), 1e-4, 3, 5, 42, "w_intent", 2.0);
  CHECK_FALSE(report.passed);
  for (const TensorCheck& tensor : report.tensors) {
    if (tensor.name == "w_intent") {
      CHECK(tensor.max_rel_error > 1e-4);
    } else {
      CHECK(tensor.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("gradient check covers the heads-only degenerate model") {
  ModelConfig config = tiny_config();
  config.num_layers = 0;
  const GradientCheckReport report = gradient_check(config, 1e-4);
  CHECK(report.passed);
}

TEST_CASE("training is deterministic given the seed") {
  DatasetSplit data = memorization_set(12);
  ModelConfig mc = tiny_config();
  mc.dropout_keep = 0.9;
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.seed = 123;
  TrainResult a = train(data, mc, tc);
  TrainResult b = train(data, mc, tc);
  REQUIRE(a.log.epochs.size() == b.log.epochs.size());
  for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
    CHECK(a.log.epochs[i].mean_loss == b.log.epochs[i].mean_loss);
    CHECK(a.log.epochs[i].val_sentence_accuracy == b.log.epochs[i].val_sentence_accuracy);
    CHECK(a.log.epochs[i].alpha == b.log.epochs[i].alpha);
  }
  CHECK(tensors_equal(a.archive.params, b.archive.params));
}

TEST_CASE("one full batch means one optimizer step per epoch") {
  DatasetSplit data = memorization_set(8);
  ModelConfig mc = tiny_config();
  mc.dropout_keep = 1.0;
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 64;
  long steps = 0;
  train(data, mc, tc, false, nullptr, nullptr, {},
        [&](long step, const ModelParams&) { steps = step; });
  CHECK(steps == 1);
}

TEST_CASE("unknown validation intent labels are rejected by name") {
  DatasetSplit data = memorization_set(8);
  data.valid[0].intent = "never_seen";
  CHECK_THROWS_WITH_AS(train(data, tiny_config(), TrainConfig{}),
                       doctest::Contains("never_seen"), InputError);
  DatasetSplit empty;
  empty.valid = data.valid;
  CHECK_THROWS_AS(train(empty, tiny_config(), TrainConfig{}), InputError);
}

TEST_CASE("full-batch memorization drives the loss to nearly zero monotonically") {
  DatasetSplit data = memorization_set(16);
  ModelConfig mc;
  mc.num_layers = 1;
  mc.hidden_size = 32;
  mc.num_heads = 2;
  mc.ffn_size = 64;
  mc.max_seq_len = 16;
  mc.dropout_keep = 1.0;  // no dropout
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 16;
  tc.learning_rate = 1e-3;
  tc.seed = 3;
  const TrainResult result = train(data, mc, tc);
  for (std::size_t i = 1; i < result.log.epochs.size(); ++i) {
    CHECK(result.log.epochs[i].mean_loss <= result.log.epochs[i - 1].mean_loss + 1e-12);
  }
  CHECK(result.log.epochs.back().mean_loss <= 0.01);
  const MetricsReport report = evaluate(result.archive, data.train);
  CHECK(report.intent_accuracy == 1.0);
  CHECK(report.slot_f1 == 1.0);
}

TEST_CASE("alpha+beta stays on the simplex after every step") {
  DatasetSplit data = memorization_set(12);
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 4;
  long checked = 0;
  train(data, mc, tc, false, nullptr, nullptr, {},
        [&](long, const ModelParams& params) {
          CHECK(std::abs(params.loss_weights.alpha() + params.loss_weights.beta() - 2.0) <= 1e-9);
          ++checked;
        });
  CHECK(checked == 12);  // 3 batches x 4 epochs
}

TEST_CASE("one-word sentences still get one masked position") {
  std::mt19937_64 rng(1);
  CHECK(select_mlm_positions(1, 0.15, rng).size() == 1);
  CHECK(select_mlm_positions(10, 0.15, rng).size() == 1);
  CHECK(select_mlm_positions(20, 0.15, rng).size() == 3);
  const auto positions = select_mlm_positions(8, 1.0, rng);
  CHECK(positions.size() == 8);
}

TEST_CASE("initial MLM loss on a shuffled-token corpus is about ln V") {
  std::mt19937_64 rng(77);
  std::vector<std::vector<std::string>> corpus;
  for (int s = 0; s < 60; ++s) {
    std::vector<std::string> sentence;
    const int len = 4 + static_cast<int>(rng() % 5);
    for (int i = 0; i < len; ++i) sentence.push_back("w" + std::to_string(rng() % 30));
    corpus.push_back(std::move(sentence));
  }
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  const PretrainResult result = pretrain_mlm(corpus, mc, tc);
  const double expected = std::log(static_cast<double>(result.config.vocab_size));
  CHECK(result.first_batch_loss == doctest::Approx(expected).epsilon(0.2));
  CHECK_THROWS_AS(pretrain_mlm({}, mc, tc), InputError);
}

TEST_CASE("MLM warm start does not hurt low-data fine-tuning") {
  const DatasetSplit synth = make_synthetic_corpus();
  std::vector<std::vector<std::string>> corpus;
  for (const LabeledExample& ex : synth.train) corpus.push_back(ex.tokens);

  ModelConfig mc;
  mc.num_layers = 1;
  mc.hidden_size = 32;
  mc.num_heads = 2;
  mc.ffn_size = 64;
  mc.max_seq_len = 16;
  mc.dropout_keep = 1.0;

  TrainConfig pre_tc;
  pre_tc.epochs = 5;
  pre_tc.batch_size = 32;
  pre_tc.seed = 5;
  const PretrainResult pretrained = pretrain_mlm(corpus, mc, pre_tc);

  double warm_sum = 0.0, cold_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DatasetSplit subset;
    subset.train = subset_fraction(synth.train, 0.25, derive_seed(99, seed));
    subset.valid = synth.valid;
    TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 32;
    tc.seed = derive_seed(7, seed);
    const TrainResult cold = train(subset, mc, tc);
    const TrainResult warm =
        train(subset, mc, tc, false, &pretrained.encoder, &pretrained.vocab);
    cold_sum += evaluate(cold.archive, synth.test).slot_f1;
    warm_sum += evaluate(warm.archive, synth.test).slot_f1;
  }
  CHECK(warm_sum / 5.0 >= cold_sum / 5.0 - 0.02);
}

}  // TEST_SUITE
