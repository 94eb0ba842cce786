// SPDX-License-Identifier: Apache-2.0
#include "vrag/corpus/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace vrag {

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, raw);
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() {
  for (std::string_view m : kMarkerTokens) {
    index_.emplace(std::string(m), static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(m);
  }
}

Vocabulary Vocabulary::build(std::span<const Tokens* const> sequences, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const Tokens* seq : sequences) {
    for (const std::string& t : *seq) ++counts[t];
  }
  std::vector<std::string> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) kept.push_back(token);
  }
  return from_tokens(kept);
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> ordinary_tokens) {
  Vocabulary v;
  for (const std::string& t : ordinary_tokens) {
    if (v.index_.contains(t)) {
      throw std::invalid_argument("duplicate or reserved vocabulary token '" + t + "'");
    }
    v.index_.emplace(t, static_cast<TokenId>(v.tokens_.size()));
    v.tokens_.push_back(t);
  }
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? id_of(Marker::Unk) : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

TokenIds Vocabulary::ids(std::span<const std::string> tokens) const {
  TokenIds out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(id(t));
  return out;
}

Tokens Vocabulary::tokens(std::span<const TokenId> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

std::vector<std::string> Vocabulary::ordinary_tokens() const {
  return {tokens_.begin() + kMarkerCount, tokens_.end()};
}

}  // namespace vrag
