#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jointslu/config.hpp"

namespace jointslu {

// Row-major so that serialized tensors and row slices are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// All weight matrices use the row-vector convention: y = x * W + b, so a
// matrix named H x F maps hidden -> ffn. Attention projections are H x H.
struct LayerParams {
  Matrix w_query, w_key, w_value, w_attn_out;  // H x H
  Vector b_query, b_key, b_value, b_attn_out;  // H
  Vector ln_attn_gain, ln_attn_bias;           // H
  Matrix w_ffn_in;                             // H x F
  Vector b_ffn_in;                             // F
  Matrix w_ffn_out;                            // F x H
  Vector b_ffn_out;                            // H
  Vector ln_ffn_gain, ln_ffn_bias;             // H
};

struct EncoderParams {
  Matrix token_embeddings;     // V x H
  Matrix position_embeddings;  // max_seq_len x H
  std::vector<LayerParams> layers;
};

struct HeadParams {
  Matrix w_intent;  // |C| x H
  Vector b_intent;  // |C|
  Matrix w_slot;    // |O| x H
  Vector b_slot;    // |O|
};

// The combined loss is L = alpha * L_c + beta * L_s where (alpha, beta) live
// on a fixed-mass simplex: (alpha, beta) = 2 * softmax(a, b). At a == b both
// weights are exactly 1, so training starts at the plain sum.
struct LossWeights {
  double a = 0.0;
  double b = 0.0;

  double alpha() const;
  double beta() const;
};

struct ModelParams {
  EncoderParams encoder;
  HeadParams heads;
  LossWeights loss_weights;
};

enum class TrainMode { kJoint, kIntentOnly, kSlotOnly };

const char* train_mode_name(TrainMode mode);
TrainMode train_mode_from_name(const std::string& name);  // throws ConfigError

// Flat view over one parameter tensor. `data` aliases the Eigen storage of the
// owning ModelParams; entries are laid out row-major when serialized.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  std::vector<Eigen::Index> shape;
  Eigen::Index size = 0;
  bool weight_decay = false;  // true only for 2-D weight matrices
  bool trainable = true;      // false when frozen by the training mode
};

ModelParams init_params(const ModelConfig& config, int num_intents, int num_slot_tags,
                        std::uint64_t seed);
ModelParams zeros_like(const ModelParams& params);

// Stable enumeration order; it defines the archive manifest and the optimizer
// state layout. The mode only toggles `trainable` flags, never the order.
std::vector<TensorRef> enumerate_tensors(ModelParams& params, TrainMode mode = TrainMode::kJoint);
std::vector<TensorRef> enumerate_encoder_tensors(EncoderParams& encoder);

bool all_finite(const ModelParams& params);

// splitmix64 step; used to derive independent rng streams from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace jointslu
