#include "jointslu/params.hpp"

#include <cmath>
#include <random>

#include "jointslu/errors.hpp"

namespace jointslu {

double LossWeights::alpha() const {
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  return 2.0 * ea / (ea + eb);
}

double LossWeights::beta() const {
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  return 2.0 * eb / (ea + eb);
}

const char* train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kJoint: return "joint";
    case TrainMode::kIntentOnly: return "intent-only";
    case TrainMode::kSlotOnly: return "slot-only";
  }
  throw InternalError("unhandled TrainMode");
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "joint") return TrainMode::kJoint;
  if (name == "intent-only") return TrainMode::kIntentOnly;
  if (name == "slot-only") return TrainMode::kSlotOnly;
  throw ConfigError("unknown mode '" + name + "' (expected joint, intent-only or slot-only)");
}

namespace {

TensorRef matrix_ref(const std::string& name, Matrix& m, bool decay) {
  return TensorRef{name, m.data(), {m.rows(), m.cols()}, m.size(), decay, true};
}

TensorRef vector_ref(const std::string& name, Vector& v) {
  return TensorRef{name, v.data(), {v.size()}, v.size(), false, true};
}

TensorRef scalar_ref(const std::string& name, double& x) {
  return TensorRef{name, &x, {1}, 1, false, true};
}

void append_layer_refs(std::vector<TensorRef>& out, LayerParams& layer, int index) {
  const std::string p = "layer" + std::to_string(index) + ".";
  out.push_back(matrix_ref(p + "w_query", layer.w_query, true));
  out.push_back(vector_ref(p + "b_query", layer.b_query));
  out.push_back(matrix_ref(p + "w_key", layer.w_key, true));
  out.push_back(vector_ref(p + "b_key", layer.b_key));
  out.push_back(matrix_ref(p + "w_value", layer.w_value, true));
  out.push_back(vector_ref(p + "b_value", layer.b_value));
  out.push_back(matrix_ref(p + "w_attn_out", layer.w_attn_out, true));
  out.push_back(vector_ref(p + "b_attn_out", layer.b_attn_out));
  out.push_back(vector_ref(p + "ln_attn_gain", layer.ln_attn_gain));
  out.push_back(vector_ref(p + "ln_attn_bias", layer.ln_attn_bias));
  out.push_back(matrix_ref(p + "w_ffn_in", layer.w_ffn_in, true));
  out.push_back(vector_ref(p + "b_ffn_in", layer.b_ffn_in));
  out.push_back(matrix_ref(p + "w_ffn_out", layer.w_ffn_out, true));
  out.push_back(vector_ref(p + "b_ffn_out", layer.b_ffn_out));
  out.push_back(vector_ref(p + "ln_ffn_gain", layer.ln_ffn_gain));
  out.push_back(vector_ref(p + "ln_ffn_bias", layer.ln_ffn_bias));
}

}  // namespace

ModelParams init_params(const ModelConfig& config, int num_intents, int num_slot_tags,
                        std::uint64_t seed) {
  config.validate();
  if (num_intents < 0 || num_slot_tags < 0) {
    throw InputError("label counts must be nonnegative");
  }
  const int h = config.hidden_size;
  const int f = config.ffn_size;

  ModelParams params;
  params.encoder.token_embeddings.resize(config.vocab_size, h);
  params.encoder.position_embeddings.resize(config.max_seq_len, h);
  params.encoder.layers.resize(static_cast<std::size_t>(config.num_layers));
  for (auto& layer : params.encoder.layers) {
    layer.w_query.resize(h, h);
    layer.b_query.resize(h);
    layer.w_key.resize(h, h);
    layer.b_key.resize(h);
    layer.w_value.resize(h, h);
    layer.b_value.resize(h);
    layer.w_attn_out.resize(h, h);
    layer.b_attn_out.resize(h);
    layer.ln_attn_gain.resize(h);
    layer.ln_attn_bias.resize(h);
    layer.w_ffn_in.resize(h, f);
    layer.b_ffn_in.resize(f);
    layer.w_ffn_out.resize(f, h);
    layer.b_ffn_out.resize(h);
    layer.ln_ffn_gain.resize(h);
    layer.ln_ffn_bias.resize(h);
  }
  params.heads.w_intent.resize(num_intents, h);
  params.heads.b_intent.resize(num_intents);
  params.heads.w_slot.resize(num_slot_tags, h);
  params.heads.b_slot.resize(num_slot_tags);

  // normal(0, 0.02) for matrices, zeros for biases, ones for layer-norm gains.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (TensorRef& ref : enumerate_tensors(params)) {
    if (ref.weight_decay) {
      for (Eigen::Index i = 0; i < ref.size; ++i) ref.data[i] = normal(rng);
    } else if (ref.name.find("gain") != std::string::npos) {
      for (Eigen::Index i = 0; i < ref.size; ++i) ref.data[i] = 1.0;
    } else {
      for (Eigen::Index i = 0; i < ref.size; ++i) ref.data[i] = 0.0;
    }
  }
  return params;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out = params;
  for (TensorRef& ref : enumerate_tensors(out)) {
    for (Eigen::Index i = 0; i < ref.size; ++i) ref.data[i] = 0.0;
  }
  return out;
}

std::vector<TensorRef> enumerate_encoder_tensors(EncoderParams& encoder) {
  std::vector<TensorRef> refs;
  refs.push_back(matrix_ref("token_embeddings", encoder.token_embeddings, true));
  refs.push_back(matrix_ref("position_embeddings", encoder.position_embeddings, true));
  for (std::size_t i = 0; i < encoder.layers.size(); ++i) {
    append_layer_refs(refs, encoder.layers[i], static_cast<int>(i));
  }
  return refs;
}

std::vector<TensorRef> enumerate_tensors(ModelParams& params, TrainMode mode) {
  std::vector<TensorRef> refs = enumerate_encoder_tensors(params.encoder);
  TensorRef w_intent = matrix_ref("w_intent", params.heads.w_intent, true);
  TensorRef b_intent = vector_ref("b_intent", params.heads.b_intent);
  TensorRef w_slot = matrix_ref("w_slot", params.heads.w_slot, true);
  TensorRef b_slot = vector_ref("b_slot", params.heads.b_slot);
  TensorRef lw_a = scalar_ref("loss_weight_a", params.loss_weights.a);
  TensorRef lw_b = scalar_ref("loss_weight_b", params.loss_weights.b);

  if (mode == TrainMode::kIntentOnly) {
    w_slot.trainable = b_slot.trainable = false;
  } else if (mode == TrainMode::kSlotOnly) {
    w_intent.trainable = b_intent.trainable = false;
  }
  if (mode != TrainMode::kJoint) {
    lw_a.trainable = lw_b.trainable = false;
  }
  refs.push_back(std::move(w_intent));
  refs.push_back(std::move(b_intent));
  refs.push_back(std::move(w_slot));
  refs.push_back(std::move(b_slot));
  refs.push_back(std::move(lw_a));
  refs.push_back(std::move(lw_b));
  return refs;
}

bool all_finite(const ModelParams& params) {
  ModelParams& mutable_params = const_cast<ModelParams&>(params);
  for (const TensorRef& ref : enumerate_tensors(mutable_params)) {
    for (Eigen::Index i = 0; i < ref.size; ++i) {
      if (!std::isfinite(ref.data[i])) return false;
    }
  }
  return true;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace jointslu
