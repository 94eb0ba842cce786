// SPDX-License-Identifier: Apache-2.0
#include "vrag/retrieval/document_index.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "vrag/errors.hpp"
#include "vrag/numerics/binary_io.hpp"

namespace vrag {
namespace {

constexpr std::uint64_t kSnapshotMagic = 0x5844494741525620ull;  // " VRAGIDX"
constexpr std::uint64_t kSnapshotVersion = 1;

bool ranks_before(const ScoredDocument& a, const ScoredDocument& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += "'" + s + "'";
  }
  return out;
}

}  // namespace

DocumentIndex::DocumentIndex(std::vector<std::string> ids, Tensor embeddings)
    : ids_(std::move(ids)), embeddings_(std::move(embeddings)) {
  if (ids_.empty()) throw std::invalid_argument("document index needs at least one document");
  if (embeddings_.rank() != 2 || embeddings_.rows() != ids_.size() || embeddings_.cols() == 0) {
    throw std::invalid_argument("embedding matrix " + shape_string(embeddings_.shape()) + " does not match " +
                                std::to_string(ids_.size()) + " document ids");
  }
  if (!all_finite(embeddings_.values())) throw std::invalid_argument("document embeddings must be finite");
  rows_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    if (!rows_.emplace(ids_[r], r).second) throw std::invalid_argument("duplicate document id '" + ids_[r] + "'");
  }
}

DocumentIndex DocumentIndex::build(std::span<const DocumentRecord> documents, const DocumentEncoder& encode) {
  if (documents.empty()) throw std::invalid_argument("cannot build an index over an empty collection");
  std::vector<std::string> ids;
  std::vector<double> values;
  std::size_t d = 0;
  for (const DocumentRecord& doc : documents) {
    std::vector<double> e = encode(doc);
    if (ids.empty()) {
      d = e.size();
      if (d == 0) throw std::invalid_argument("document encoder produced an empty embedding");
      values.reserve(d * documents.size());
    } else if (e.size() != d) {
      throw std::invalid_argument("document encoder output dimension changed from " + std::to_string(d) + " to " +
                                  std::to_string(e.size()));
    }
    ids.push_back(doc.id);
    values.insert(values.end(), e.begin(), e.end());
  }
  return DocumentIndex(std::move(ids), Tensor::matrix(documents.size(), d, std::move(values)));
}

std::size_t DocumentIndex::row_of(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw std::invalid_argument("unknown document id '" + id + "'");
  return it->second;
}

void DocumentIndex::check_query(std::span<const double> query) const {
  if (empty()) throw std::invalid_argument("search on an empty index");
  if (query.size() != dim()) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                                std::to_string(dim()));
  }
}

TopKResult DocumentIndex::search(std::span<const double> query, std::size_t k) const {
  check_query(query);
  if (k == 0) throw std::invalid_argument("search needs k >= 1");
  TopKResult all;
  all.reserve(size());
  for (std::size_t r = 0; r < size(); ++r) all.push_back({ids_[r], r, dot(embeddings_.row(r), query)});
  const std::size_t n = std::min(k, size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), ranks_before);
  all.resize(n);
  return all;
}

std::vector<ScoredDocument> DocumentIndex::scores_on_support(std::span<const double> query,
                                                             std::span<const std::string> support) const {
  check_query(query);
  std::vector<ScoredDocument> out;
  out.reserve(support.size());
  std::unordered_set<std::string> seen;
  for (const std::string& id : support) {
    if (!seen.insert(id).second) throw std::invalid_argument("support lists document '" + id + "' twice");
    const std::size_t r = row_of(id);
    out.push_back({id, r, dot(embeddings_.row(r), query)});
  }
  return out;
}

DocumentIndex DocumentIndex::remove(std::span<const std::string> doc_ids) const {
  std::unordered_set<std::string> drop;
  std::vector<std::string> missing;
  for (const std::string& id : doc_ids) {
    if (!contains(id)) {
      if (std::find(missing.begin(), missing.end(), id) == missing.end()) missing.push_back(id);
    } else {
      drop.insert(id);
    }
  }
  if (!missing.empty()) throw std::invalid_argument("cannot remove unknown document ids: " + join(missing));
  if (drop.size() == size()) throw std::invalid_argument("removal would leave the index empty");
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t r = 0; r < size(); ++r) {
    if (drop.contains(ids_[r])) continue;
    ids.push_back(ids_[r]);
    const auto row = embeddings_.row(r);
    values.insert(values.end(), row.begin(), row.end());
  }
  const std::size_t n = ids.size();
  return DocumentIndex(std::move(ids), Tensor::matrix(n, dim(), std::move(values)));
}

void DocumentIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write index snapshot " + path.string());
  binary::write_u64(out, kSnapshotMagic);
  binary::write_u64(out, kSnapshotVersion);
  binary::write_u64(out, size());
  binary::write_u64(out, dim());
  for (const std::string& id : ids_) binary::write_string(out, id);
  binary::write_f64s(out, embeddings_.values());
  if (!out) throw DataError("failed writing index snapshot " + path.string());
}

DocumentIndex DocumentIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index snapshot " + path.string());
  try {
    if (binary::read_u64(in) != kSnapshotMagic) throw DataError(path.string() + ": not an index snapshot");
    const std::uint64_t version = binary::read_u64(in);
    if (version != kSnapshotVersion) {
      throw DataError(path.string() + ": unsupported snapshot version " + std::to_string(version));
    }
    const std::uint64_t n = binary::read_u64(in);
    const std::uint64_t d = binary::read_u64(in);
    if (n == 0 || d == 0 || n > (1u << 24) || d > (1u << 16)) {
      throw DataError(path.string() + ": implausible snapshot header");
    }
    std::vector<std::string> ids(n);
    for (auto& id : ids) id = binary::read_string(in);
    Tensor embeddings({n, d});
    binary::read_f64s(in, embeddings.values());
    return DocumentIndex(std::move(ids), std::move(embeddings));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace vrag
