// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vrag/numerics/tape.hpp"

namespace vrag {

using TokenId = RowIndex;
using Tokens = std::vector<std::string>;
using TokenIds = std::vector<TokenId>;

/// Reserved marker ids. They occupy the first ids of every vocabulary in this
/// order.
enum class Marker : TokenId {
  Cls = 0,
  Sep,
  Speaker1,
  Speaker2,
  ResponseSep,
  Bos,
  Eos,
  KnowledgeSep,
  Unk,
  Pad,
};

inline constexpr std::size_t kMarkerCount = 10;

inline constexpr TokenId id_of(Marker m) { return static_cast<TokenId>(m); }

inline constexpr std::array<std::string_view, kMarkerCount> kMarkerTokens = {
    "[CLS]", "[SEP]", "<S1>", "<S2>", "<RSEP>", "<bos>", "<eos>", "<KSEP>", "<unk>", "<pad>"};

/// Lowercases, splits on whitespace, and emits every ASCII punctuation
/// character as its own token.
Tokens tokenize(std::string_view text);

/// Dense token <-> id map. Markers take ids 0..9; ordinary tokens follow in
/// lexicographic order, which makes build() deterministic.
class Vocabulary {
 public:
  Vocabulary();

  /// Keeps every token seen at least `min_count` times across `sequences`.
  static Vocabulary build(std::span<const Tokens* const> sequences, std::size_t min_count = 1);
  static Vocabulary from_tokens(std::span<const std::string> ordinary_tokens);

  std::size_t size() const noexcept { return tokens_.size(); }

  // Unknown tokens map to <unk>.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  TokenIds ids(std::span<const std::string> tokens) const;
  Tokens tokens(std::span<const TokenId> ids) const;

  // Ordinary tokens only (markers excluded), in id order.
  std::vector<std::string> ordinary_tokens() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace vrag
