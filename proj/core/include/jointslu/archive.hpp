#pragma once

#include <string>

#include "jointslu/config.hpp"
#include "jointslu/data.hpp"
#include "jointslu/heads.hpp"
#include "jointslu/params.hpp"

namespace jointslu {

// On-disk model: a directory holding config.json (shapes, vocabularies and the
// tensor manifest) and weights.bin (the manifest's tensors as little-endian
// float32, row-major within each tensor).
struct ModelArchive {
  ModelConfig config;
  Vocabulary vocab;
  LabelMaps labels;
  ModelParams params;
};

void save_archive(const ModelArchive& archive, const std::string& directory);
ModelArchive load_archive(const std::string& directory);

// Encoder-only archive (no heads, empty label maps); used as a warm start.
void save_encoder_archive(const ModelConfig& config, const Vocabulary& vocab,
                          const EncoderParams& encoder, const std::string& directory);

struct EncoderArchive {
  ModelConfig config;
  Vocabulary vocab;
  EncoderParams encoder;
};

EncoderArchive load_encoder_archive(const std::string& directory);

}  // namespace jointslu
