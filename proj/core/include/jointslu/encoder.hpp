#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "jointslu/config.hpp"
#include "jointslu/params.hpp"

namespace jointslu {

// Index 0 carries the reserved sequence-start token whose final hidden state
// feeds the sentence-level classifier.
struct TokenIds {
  std::vector<int> ids;
  std::vector<std::uint8_t> attention_mask;  // 1 = real position, 0 = padding
};

// (n+1) x H, row j is h_j.
using HiddenSequence = Matrix;

void validate_token_ids(const TokenIds& token_ids, const ModelConfig& config);

// Row j = token_embeddings[ids[j]] + position_embeddings[j].
Matrix embed(const TokenIds& token_ids, const EncoderParams& params, const ModelConfig& config);

// Row-wise (x - mean) / sqrt(var + eps); var uses the 1/H convention.
Matrix layer_norm_normalized(const Matrix& x, double epsilon);
Matrix layer_norm(const Matrix& x, const Vector& gain, const Vector& bias, double epsilon);

double gelu(double x);
Matrix gelu(const Matrix& x);
Matrix gelu_derivative(const Matrix& x);

// Inverted-dropout mask: entries are 0 or 1/keep. Consumes one uniform draw
// per entry, row by row.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double keep, std::mt19937_64& rng);

struct AttentionResult {
  Matrix output;                // m x H
  std::vector<Matrix> weights;  // one m x m row-stochastic matrix per head
};

// Scaled dot-product attention over num_heads heads. Masked key positions get
// -1e9 added to their scores, which underflows to an exact 0 weight.
AttentionResult multi_head_attention(const Matrix& x, const LayerParams& layer,
                                     const std::vector<std::uint8_t>& mask, int num_heads);

// Embedding followed by num_layers blocks of
//   attention -> residual add -> layer norm -> FFN (GELU) -> residual add -> layer norm.
// Deterministic in eval mode; rng is only consumed when train_mode is set and
// internal dropout is enabled.
HiddenSequence encoder_forward(const TokenIds& token_ids, const EncoderParams& params,
                               const ModelConfig& config, bool train_mode = false,
                               std::mt19937_64* rng = nullptr);

// Every intermediate needed by the analytic backward pass.
struct LayerCache {
  Matrix input;                      // x
  Matrix q, k, v;                    // m x H after projections
  std::vector<Matrix> attn_weights;  // per head, m x m
  Matrix attn_concat;                // heads concatenated, before w_attn_out
  Matrix attn_out;                   // after w_attn_out + bias
  Matrix attn_drop_mask;             // empty unless internal dropout is active
  Matrix sum_attn;                   // x + attention output
  Matrix ln_attn_xhat;
  Vector ln_attn_inv_std;
  Matrix ln_attn_out;
  Matrix ffn_pre;   // m x F, before activation
  Matrix ffn_act;   // gelu(ffn_pre)
  Matrix ffn_out;   // after w_ffn_out + bias
  Matrix ffn_drop_mask;
  Matrix sum_ffn;   // ln_attn_out + ffn output
  Matrix ln_ffn_xhat;
  Vector ln_ffn_inv_std;
  Matrix ln_ffn_out;  // layer output
};

struct EncoderCache {
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;
  Matrix embedded;
  std::vector<LayerCache> layers;

  const Matrix& final_hidden() const { return layers.empty() ? embedded : layers.back().ln_ffn_out; }
};

EncoderCache encoder_forward_cached(const TokenIds& token_ids, const EncoderParams& params,
                                    const ModelConfig& config, bool train_mode = false,
                                    std::mt19937_64* rng = nullptr);

// Accumulates into grads; callers zero it once per batch.
void encoder_backward(const EncoderCache& cache, const Matrix& d_hidden,
                      const EncoderParams& params, const ModelConfig& config,
                      EncoderParams& grads);

}  // namespace jointslu
