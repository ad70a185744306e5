#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "verso/model.hpp"
#include "verso/training.hpp"
#include "verso/vocab.hpp"

namespace verso {

// Versioned binary checkpoint: magic, format version, dims, vocabulary
// content hash, each tensor as row-major little-endian float32, then the
// optimizer state when present.
struct Checkpoint {
  ModelParams<float> params;
  std::uint64_t vocab_hash = 0;
  std::optional<AdamState<float>> opt;
};

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     std::uint64_t vocab_hash, const AdamState<float>* opt = nullptr);

// Throws DataError on unrecognized layout. When `expect` is given, the
// checkpoint's vocabulary hash and size must match it.
Checkpoint load_checkpoint(const std::string& path, const Vocabulary* expect = nullptr);

}  // namespace verso
