// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrag/corpus/encoding.hpp"
#include "vrag/numerics/tensor.hpp"

namespace vrag {

struct ScoredDocument {
  std::string id;
  std::size_t row = 0;
  double score = 0.0;

  bool operator==(const ScoredDocument&) const = default;
};

/// Descending by raw inner product; equal scores ordered by ascending id.
using TopKResult = std::vector<ScoredDocument>;

/// Frozen document embeddings with exact maximum-inner-product search.
/// Immutable once built: removal returns a new index.
class DocumentIndex {
 public:
  using DocumentEncoder = std::function<std::vector<double>(const DocumentRecord&)>;

  DocumentIndex() = default;
  /// Rows of `embeddings` align with `ids`. Throws std::invalid_argument on an
  /// empty collection, a shape mismatch or a duplicate id.
  DocumentIndex(std::vector<std::string> ids, Tensor embeddings);

  static DocumentIndex build(std::span<const DocumentRecord> documents, const DocumentEncoder& encode);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return embeddings_.empty() ? 0 : embeddings_.cols(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Tensor& embeddings() const noexcept { return embeddings_; }
  std::span<const double> embedding(std::size_t row) const { return embeddings_.row(row); }

  bool contains(const std::string& id) const { return rows_.contains(id); }
  /// Throws std::invalid_argument for an unknown id.
  std::size_t row_of(const std::string& id) const;

  /// Exact top-min(k, N). Throws std::invalid_argument when k == 0 or the
  /// query dimension differs from dim().
  TopKResult search(std::span<const double> query, std::size_t k) const;

  /// Raw inner products for `support`, in the given order. Unknown or
  /// repeated ids throw std::invalid_argument.
  std::vector<ScoredDocument> scores_on_support(std::span<const double> query,
                                                std::span<const std::string> support) const;

  /// A new index without `doc_ids`. Unknown ids are reported together.
  DocumentIndex remove(std::span<const std::string> doc_ids) const;

  /// Binary snapshot: magic, version, N, d, ids, row-major doubles.
  void save(const std::filesystem::path& path) const;
  static DocumentIndex load(const std::filesystem::path& path);

  bool operator==(const DocumentIndex& other) const {
    return ids_ == other.ids_ && embeddings_ == other.embeddings_;
  }

 private:
  void check_query(std::span<const double> query) const;

  std::vector<std::string> ids_;
  Tensor embeddings_;
  std::unordered_map<std::string, std::size_t> rows_;
};

}  // namespace vrag
