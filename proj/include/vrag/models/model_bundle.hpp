// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vrag/models/decoder.hpp"
#include "vrag/models/encoder.hpp"

namespace vrag {

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embedding = 32;
  std::size_t retrieval = 32;
  std::size_t hidden = 64;

  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

/// Every trainable and frozen tensor of one model. The prior and posterior
/// own separate storage; the document encoder is frozen.
struct ModelBundle {
  ModelDims dims;
  std::uint64_t seed = 0;
  EncoderParams prior;
  EncoderParams posterior;
  EncoderParams document;
  DecoderParams decoder;

  /// All tensors i.i.d. uniform(-0.1, 0.1) in a fixed order: prior,
  /// posterior, document encoder, decoder.
  static ModelBundle init(const ModelDims& dims, std::uint64_t seed);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  /// Versioned binary checkpoint: dims, seed, then every tensor by name.
  /// Round-trips bit-exactly.
  void save(const std::filesystem::path& path) const;
  static ModelBundle load(const std::filesystem::path& path);

  bool operator==(const ModelBundle& other) const;
};

}  // namespace vrag
