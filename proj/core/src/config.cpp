#include "jointslu/config.hpp"

#include <string>

#include "jointslu/errors.hpp"

namespace jointslu {

void ModelConfig::validate() const {
  if (num_layers < 0) throw ConfigError("num_layers must be >= 0");
  if (hidden_size <= 0) throw ConfigError("hidden_size must be positive");
  if (num_heads <= 0) throw ConfigError("num_heads must be positive");
  if (hidden_size % num_heads != 0) {
    throw ConfigError("hidden_size " + std::to_string(hidden_size) +
                      " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (ffn_size <= 0) throw ConfigError("ffn_size must be positive");
  if (vocab_size < 4) throw ConfigError("vocab_size must cover the 4 reserved ids");
  if (max_seq_len < 2) throw ConfigError("max_seq_len must be >= 2");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    throw ConfigError("dropout_keep must be in (0, 1]");
  }
  if (!(layernorm_epsilon > 0.0)) throw ConfigError("layernorm_epsilon must be positive");
}

}  // namespace jointslu
