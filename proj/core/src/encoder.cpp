#include "jointslu/encoder.hpp"

#include <cmath>
#include <string>

#include "jointslu/errors.hpp"

namespace jointslu {

namespace {

constexpr double kMaskScore = -1e9;
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Row-wise softmax in place. Masked columns are forced to an exact 0 weight;
// leaving them to exp underflow is not enough because Eigen's vectorized exp
// clamps the argument and emits subnormals instead of zeros.
void masked_softmax_rows(Matrix& scores, const std::vector<std::uint8_t>& mask) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - m).exp();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (!mask[static_cast<std::size_t>(j)]) scores(i, j) = 0.0;
    }
    scores.row(i) /= scores.row(i).sum();
  }
}

// d_scores = p .* (d_p - rowwise_dot(d_p, p))
Matrix softmax_rows_backward(const Matrix& probs, const Matrix& d_probs) {
  Matrix d_scores(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double dot = probs.row(i).dot(d_probs.row(i));
    d_scores.row(i) = (probs.row(i).array() * (d_probs.row(i).array() - dot)).matrix();
  }
  return d_scores;
}

struct LayerNormResult {
  Matrix out;
  Matrix xhat;
  Vector inv_std;
};

LayerNormResult layer_norm_full(const Matrix& x, const Vector& gain, const Vector& bias,
                                double epsilon) {
  LayerNormResult r;
  const Eigen::Index h = x.cols();
  r.xhat.resize(x.rows(), h);
  r.inv_std.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() / static_cast<double>(h);
    r.inv_std(i) = 1.0 / std::sqrt(var + epsilon);
    r.xhat.row(i) = (x.row(i).array() - mean) * r.inv_std(i);
  }
  r.out = (r.xhat.array().rowwise() * gain.transpose().array()).rowwise() +
          bias.transpose().array();
  return r;
}

// dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat)), per row.
Matrix layer_norm_backward(const Matrix& d_out, const Matrix& xhat, const Vector& inv_std,
                           const Vector& gain, Vector& d_gain, Vector& d_bias) {
  const Eigen::Index h = xhat.cols();
  Matrix dx(xhat.rows(), h);
  for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
    const Eigen::RowVectorXd dxhat = d_out.row(i).cwiseProduct(gain.transpose());
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(i)).sum() / static_cast<double>(h);
    dx.row(i) =
        (inv_std(i) * (dxhat.array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat))
            .matrix();
  }
  d_gain += (d_out.cwiseProduct(xhat)).colwise().sum().transpose();
  d_bias += d_out.colwise().sum().transpose();
  return dx;
}

}  // namespace

void validate_token_ids(const TokenIds& token_ids, const ModelConfig& config) {
  if (token_ids.ids.empty()) throw InputError("token id sequence is empty");
  if (token_ids.ids.size() != token_ids.attention_mask.size()) {
    throw InputError("attention mask length does not match id sequence length");
  }
  if (static_cast<int>(token_ids.ids.size()) > config.max_seq_len) {
    throw InputError("sequence of length " + std::to_string(token_ids.ids.size()) +
                     " exceeds max_seq_len " + std::to_string(config.max_seq_len));
  }
  if (!token_ids.attention_mask[0]) throw InputError("position 0 must not be masked");
  for (int id : token_ids.ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw InputError("token id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(config.vocab_size) + ")");
    }
  }
}

Matrix embed(const TokenIds& token_ids, const EncoderParams& params, const ModelConfig& config) {
  validate_token_ids(token_ids, config);
  const Eigen::Index m = static_cast<Eigen::Index>(token_ids.ids.size());
  Matrix out(m, config.hidden_size);
  for (Eigen::Index j = 0; j < m; ++j) {
    out.row(j) = params.token_embeddings.row(token_ids.ids[static_cast<std::size_t>(j)]) +
                 params.position_embeddings.row(j);
  }
  return out;
}

Matrix layer_norm_normalized(const Matrix& x, double epsilon) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() / static_cast<double>(x.cols());
    out.row(i) = (x.row(i).array() - mean) / std::sqrt(var + epsilon);
  }
  return out;
}

Matrix layer_norm(const Matrix& x, const Vector& gain, const Vector& bias, double epsilon) {
  return layer_norm_full(x, gain, bias, epsilon).out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

Matrix gelu_derivative(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
    return cdf + v * pdf;
  });
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double keep, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      mask(i, j) = uniform(rng) < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

AttentionResult multi_head_attention(const Matrix& x, const LayerParams& layer,
                                     const std::vector<std::uint8_t>& mask, int num_heads) {
  const Eigen::Index m = x.rows();
  const Eigen::Index h = x.cols();
  if (static_cast<Eigen::Index>(mask.size()) != m) {
    throw InputError("attention mask length does not match input rows");
  }
  if (!x.allFinite()) throw NumericError("attention input contains NaN or Inf");
  const Eigen::Index d = h / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix q = x * layer.w_query;
  q.rowwise() += layer.b_query.transpose();
  Matrix k = x * layer.w_key;
  k.rowwise() += layer.b_key.transpose();
  Matrix v = x * layer.w_value;
  v.rowwise() += layer.b_value.transpose();

  AttentionResult result;
  result.weights.reserve(static_cast<std::size_t>(num_heads));
  Matrix concat(m, h);
  for (int a = 0; a < num_heads; ++a) {
    const Eigen::Index off = a * d;
    Matrix scores = q.middleCols(off, d) * k.middleCols(off, d).transpose() * scale;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!mask[static_cast<std::size_t>(j)]) scores.col(j).array() += kMaskScore;
    }
    masked_softmax_rows(scores, mask);
    concat.middleCols(off, d) = scores * v.middleCols(off, d);
    result.weights.push_back(std::move(scores));
  }
  result.output = concat * layer.w_attn_out;
  result.output.rowwise() += layer.b_attn_out.transpose();
  return result;
}

EncoderCache encoder_forward_cached(const TokenIds& token_ids, const EncoderParams& params,
                                    const ModelConfig& config, bool train_mode,
                                    std::mt19937_64* rng) {
  EncoderCache cache;
  cache.ids = token_ids.ids;
  cache.mask = token_ids.attention_mask;
  cache.embedded = embed(token_ids, params, config);

  const bool use_internal_dropout =
      train_mode && config.internal_dropout && config.dropout_keep < 1.0;
  if (use_internal_dropout && rng == nullptr) {
    throw InputError("train-mode dropout requires an rng");
  }

  const Matrix* x = &cache.embedded;
  cache.layers.reserve(params.layers.size());
  for (const LayerParams& layer : params.layers) {
    LayerCache lc;
    lc.input = *x;

    const Eigen::Index m = lc.input.rows();
    const Eigen::Index h = lc.input.cols();
    lc.q = lc.input * layer.w_query;
    lc.q.rowwise() += layer.b_query.transpose();
    lc.k = lc.input * layer.w_key;
    lc.k.rowwise() += layer.b_key.transpose();
    lc.v = lc.input * layer.w_value;
    lc.v.rowwise() += layer.b_value.transpose();

    const int num_heads = config.num_heads;
    const Eigen::Index d = h / num_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    lc.attn_concat.resize(m, h);
    lc.attn_weights.reserve(static_cast<std::size_t>(num_heads));
    for (int a = 0; a < num_heads; ++a) {
      const Eigen::Index off = a * d;
      Matrix scores = lc.q.middleCols(off, d) * lc.k.middleCols(off, d).transpose() * scale;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (!cache.mask[static_cast<std::size_t>(j)]) scores.col(j).array() += kMaskScore;
      }
      masked_softmax_rows(scores, cache.mask);
      lc.attn_concat.middleCols(off, d) = scores * lc.v.middleCols(off, d);
      lc.attn_weights.push_back(std::move(scores));
    }
    lc.attn_out = lc.attn_concat * layer.w_attn_out;
    lc.attn_out.rowwise() += layer.b_attn_out.transpose();

    Matrix attn_dropped = lc.attn_out;
    if (use_internal_dropout) {
      lc.attn_drop_mask = dropout_mask(m, h, config.dropout_keep, *rng);
      attn_dropped = attn_dropped.cwiseProduct(lc.attn_drop_mask);
    }
    lc.sum_attn = lc.input + attn_dropped;

    LayerNormResult ln1 =
        layer_norm_full(lc.sum_attn, layer.ln_attn_gain, layer.ln_attn_bias,
                        config.layernorm_epsilon);
    lc.ln_attn_xhat = std::move(ln1.xhat);
    lc.ln_attn_inv_std = std::move(ln1.inv_std);
    lc.ln_attn_out = std::move(ln1.out);

    lc.ffn_pre = lc.ln_attn_out * layer.w_ffn_in;
    lc.ffn_pre.rowwise() += layer.b_ffn_in.transpose();
    lc.ffn_act = gelu(lc.ffn_pre);
    lc.ffn_out = lc.ffn_act * layer.w_ffn_out;
    lc.ffn_out.rowwise() += layer.b_ffn_out.transpose();

    Matrix ffn_dropped = lc.ffn_out;
    if (use_internal_dropout) {
      lc.ffn_drop_mask = dropout_mask(m, h, config.dropout_keep, *rng);
      ffn_dropped = ffn_dropped.cwiseProduct(lc.ffn_drop_mask);
    }
    lc.sum_ffn = lc.ln_attn_out + ffn_dropped;

    LayerNormResult ln2 = layer_norm_full(lc.sum_ffn, layer.ln_ffn_gain, layer.ln_ffn_bias,
                                          config.layernorm_epsilon);
    lc.ln_ffn_xhat = std::move(ln2.xhat);
    lc.ln_ffn_inv_std = std::move(ln2.inv_std);
    lc.ln_ffn_out = std::move(ln2.out);

    cache.layers.push_back(std::move(lc));
    x = &cache.layers.back().ln_ffn_out;
  }
  return cache;
}

HiddenSequence encoder_forward(const TokenIds& token_ids, const EncoderParams& params,
                               const ModelConfig& config, bool train_mode,
                               std::mt19937_64* rng) {
  return encoder_forward_cached(token_ids, params, config, train_mode, rng).final_hidden();
}

void encoder_backward(const EncoderCache& cache, const Matrix& d_hidden,
                      const EncoderParams& params, const ModelConfig& config,
                      EncoderParams& grads) {
  Matrix d_x = d_hidden;
  const int num_heads = config.num_heads;

  for (std::size_t li = cache.layers.size(); li-- > 0;) {
    const LayerCache& lc = cache.layers[li];
    const LayerParams& layer = params.layers[li];
    LayerParams& g = grads.layers[li];
    const Eigen::Index m = lc.input.rows();
    const Eigen::Index h = lc.input.cols();
    const Eigen::Index d = h / num_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    // layer norm after the FFN
    Matrix d_sum_ffn = layer_norm_backward(d_x, lc.ln_ffn_xhat, lc.ln_ffn_inv_std,
                                           layer.ln_ffn_gain, g.ln_ffn_gain, g.ln_ffn_bias);

    // FFN branch
    Matrix d_ffn_out = d_sum_ffn;
    if (lc.ffn_drop_mask.size() > 0) d_ffn_out = d_ffn_out.cwiseProduct(lc.ffn_drop_mask);
    g.w_ffn_out += lc.ffn_act.transpose() * d_ffn_out;
    g.b_ffn_out += d_ffn_out.colwise().sum().transpose();
    Matrix d_act = d_ffn_out * layer.w_ffn_out.transpose();
    Matrix d_pre = d_act.cwiseProduct(gelu_derivative(lc.ffn_pre));
    g.w_ffn_in += lc.ln_attn_out.transpose() * d_pre;
    g.b_ffn_in += d_pre.colwise().sum().transpose();

    Matrix d_ln_attn_out = d_sum_ffn + d_pre * layer.w_ffn_in.transpose();

    // layer norm after attention
    Matrix d_sum_attn =
        layer_norm_backward(d_ln_attn_out, lc.ln_attn_xhat, lc.ln_attn_inv_std,
                            layer.ln_attn_gain, g.ln_attn_gain, g.ln_attn_bias);

    // attention branch
    Matrix d_attn_out = d_sum_attn;
    if (lc.attn_drop_mask.size() > 0) d_attn_out = d_attn_out.cwiseProduct(lc.attn_drop_mask);
    g.w_attn_out += lc.attn_concat.transpose() * d_attn_out;
    g.b_attn_out += d_attn_out.colwise().sum().transpose();
    Matrix d_concat = d_attn_out * layer.w_attn_out.transpose();

    Matrix d_q = Matrix::Zero(m, h);
    Matrix d_k = Matrix::Zero(m, h);
    Matrix d_v = Matrix::Zero(m, h);
    for (int a = 0; a < num_heads; ++a) {
      const Eigen::Index off = a * d;
      const Matrix& probs = lc.attn_weights[static_cast<std::size_t>(a)];
      Matrix d_head = d_concat.middleCols(off, d);
      Matrix d_probs = d_head * lc.v.middleCols(off, d).transpose();
      d_v.middleCols(off, d) = probs.transpose() * d_head;
      Matrix d_scores = softmax_rows_backward(probs, d_probs);
      d_q.middleCols(off, d) = d_scores * lc.k.middleCols(off, d) * scale;
      d_k.middleCols(off, d) = d_scores.transpose() * lc.q.middleCols(off, d) * scale;
    }
    g.w_query += lc.input.transpose() * d_q;
    g.b_query += d_q.colwise().sum().transpose();
    g.w_key += lc.input.transpose() * d_k;
    g.b_key += d_k.colwise().sum().transpose();
    g.w_value += lc.input.transpose() * d_v;
    g.b_value += d_v.colwise().sum().transpose();

    d_x = d_sum_attn + d_q * layer.w_query.transpose() + d_k * layer.w_key.transpose() +
          d_v * layer.w_value.transpose();
  }

  // embedding scatter
  for (Eigen::Index j = 0; j < d_x.rows(); ++j) {
    grads.token_embeddings.row(cache.ids[static_cast<std::size_t>(j)]) += d_x.row(j);
    grads.position_embeddings.row(j) += d_x.row(j);
  }
}

}  // namespace jointslu
