#pragma once

namespace jointslu {

// Shape and numeric settings of the encoder. vocab_size is normally filled in
// from the vocabulary right before parameters are allocated.
struct ModelConfig {
  int num_layers = 2;
  int hidden_size = 64;
  int num_heads = 4;
  int ffn_size = 256;
  int vocab_size = 4;
  int max_seq_len = 64;
  double dropout_keep = 0.9;        // keep probability for final-hidden-state dropout
  double layernorm_epsilon = 1e-12;
  bool internal_dropout = false;    // dropout inside encoder blocks; off by default

  // Throws ConfigError when any field is out of range. num_layers = 0 is
  // allowed (embeddings feed the heads directly).
  void validate() const;
};

}  // namespace jointslu
