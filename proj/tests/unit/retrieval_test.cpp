// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "vrag/errors.hpp"
#include "vrag/numerics/random.hpp"
#include "vrag/retrieval/document_index.hpp"

using namespace vrag;

namespace {

DocumentIndex three_rows() {
  return DocumentIndex({"doc0", "doc1", "doc2"}, Tensor::matrix(3, 2, {1, 0, 0, 1, 1, 1}));
}

DocumentIndex random_index(Rng& rng, std::size_t n, std::size_t d, bool coarse) {
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("d" + std::to_string(1000 + (i * 7919) % 1000));
    for (std::size_t j = 0; j < d; ++j) {
      values.push_back(coarse ? static_cast<double>(rng.below(3)) : rng.uniform(-1, 1));
    }
  }
  return DocumentIndex(std::move(ids), Tensor::matrix(n, d, std::move(values)));
}

// Independent oracle: score every row, sort with the documented rule.
TopKResult brute_force(const DocumentIndex& index, std::span<const double> q, std::size_t k) {
  TopKResult all;
  for (std::size_t r = 0; r < index.size(); ++r) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += index.embeddings().row(r)[j] * q[j];
    all.push_back({index.ids()[r], r, s});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.score > b.score || (a.score == b.score && a.id < b.id);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

std::vector<std::string> ids_of(const TopKResult& r) {
  std::vector<std::string> out;
  for (const auto& s : r) out.push_back(s.id);
  return out;
}

}  // namespace

TEST_CASE("search example") {
  const DocumentIndex index = three_rows();
  const std::vector<double> q = {2, 1};
  const TopKResult top = index.search(q, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].id == "doc2");
  CHECK(top[0].score == 3.0);
  CHECK(top[1].id == "doc0");
  CHECK(top[1].score == 2.0);

  CHECK(index.search(q, 10).size() == 3);
  CHECK_THROWS_AS(index.search(std::vector<double>{1, 2, 3}, 1), std::invalid_argument);
  CHECK_THROWS_AS(index.search(q, 0), std::invalid_argument);
}

TEST_CASE("ties go to the lower document id") {
  const DocumentIndex index({"b", "a", "c"}, Tensor::matrix(3, 1, {1, 1, 1}));
  CHECK(ids_of(index.search(std::vector<double>{1}, 3)) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("single document and empty collection") {
  const DocumentIndex one({"only"}, Tensor::matrix(1, 2, {0.5, -1}));
  CHECK(one.search(std::vector<double>{-3, 7}, 1)[0].id == "only");
  CHECK_THROWS_AS(DocumentIndex({}, Tensor()), std::invalid_argument);
  CHECK_THROWS_AS(DocumentIndex::build({}, [](const DocumentRecord&) { return std::vector<double>{1}; }),
                  std::invalid_argument);
  CHECK_THROWS_AS(DocumentIndex({"x", "x"}, Tensor::matrix(2, 1, {1, 2})), std::invalid_argument);
}

TEST_CASE("build applies the encoder per document and is deterministic") {
  const std::vector<DocumentRecord> docs = {make_document("a", "one two"), make_document("b", "three")};
  auto encode = [](const DocumentRecord& d) {
    return std::vector<double>{static_cast<double>(d.tokens.size()), 1.0};
  };
  const DocumentIndex first = DocumentIndex::build(docs, encode);
  const DocumentIndex second = DocumentIndex::build(docs, encode);
  CHECK(first == second);
  CHECK(first.embedding(0)[0] == 2.0);
  CHECK(first.embedding(1)[0] == 1.0);
  auto ragged = [](const DocumentRecord& d) { return std::vector<double>(d.tokens.size(), 1.0); };
  CHECK_THROWS_AS(DocumentIndex::build(docs, ragged), std::invalid_argument);
}

TEST_CASE("search agrees with brute force and has the prefix property") {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const bool coarse = trial % 2 == 0;
    const DocumentIndex index = random_index(rng, 1 + rng.below(40), 1 + rng.below(6), coarse);
    std::vector<double> q(index.dim());
    for (double& v : q) v = coarse ? static_cast<double>(rng.below(3)) : rng.normal();
    const TopKResult full = index.search(q, index.size());
    CHECK(full == brute_force(index, q, index.size()));
    for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i - 1].score >= full[i].score);
    for (std::size_t k = 1; k <= index.size(); ++k) {
      const TopKResult top = index.search(q, k);
      CHECK(std::equal(top.begin(), top.end(), full.begin()));
    }
  }
}

TEST_CASE("remove matches deleting rows from the full ranking") {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const DocumentIndex index = random_index(rng, 2 + rng.below(30), 3, trial % 2 == 0);
    std::vector<std::string> drop;
    for (const auto& id : index.ids()) {
      if (rng.bernoulli(0.3) && drop.size() + 1 < index.size()) drop.push_back(id);
    }
    const DocumentIndex reduced = index.remove(drop);
    CHECK(reduced.size() == index.size() - drop.size());
    std::vector<double> q = {rng.normal(), rng.normal(), rng.normal()};
    std::vector<std::string> expected;
    for (const auto& s : index.search(q, index.size())) {
      if (std::find(drop.begin(), drop.end(), s.id) == drop.end()) expected.push_back(s.id);
    }
    CHECK(ids_of(reduced.search(q, reduced.size())) == expected);
  }
}

TEST_CASE("remove examples") {
  const DocumentIndex index = three_rows();
  const std::vector<double> q = {2, 1};
  const std::vector<std::string> none;
  CHECK(index.remove(none).search(q, 3) == index.search(q, 3));

  const std::vector<std::string> top = {"doc2"};
  const DocumentIndex without_top = index.remove(top);
  CHECK(without_top.search(q, 1)[0].id == "doc0");
  CHECK(index.size() == 3);

  const std::vector<std::string> all_but_one = {"doc0", "doc2"};
  const TopKResult survivor = index.remove(all_but_one).search(q, 3);
  REQUIRE(survivor.size() == 1);
  CHECK(survivor[0].id == "doc1");

  const std::vector<std::string> unknown = {"doc1", "nope", "gone"};
  try {
    index.remove(unknown);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'nope'") != std::string::npos);
    CHECK(msg.find("'gone'") != std::string::npos);
  }
}

TEST_CASE("scores_on_support") {
  const DocumentIndex index = three_rows();
  const std::vector<double> q = {2, 1};
  const TopKResult top = index.search(q, 2);
  const std::vector<std::string> support = {top[0].id, top[1].id};
  CHECK(index.scores_on_support(q, support) == top);

  const std::vector<std::string> single = {"doc1"};
  const auto one = index.scores_on_support(q, single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].score == 1.0);

  const std::vector<std::string> reversed = {"doc0", "doc2"};
  CHECK(index.scores_on_support(q, reversed)[0].id == "doc0");

  const std::vector<std::string> dup = {"doc0", "doc0"};
  CHECK_THROWS_AS(index.scores_on_support(q, dup), std::invalid_argument);
  const std::vector<std::string> missing = {"zzz"};
  CHECK_THROWS_AS(index.scores_on_support(q, missing), std::invalid_argument);
}

TEST_CASE("snapshot round-trips bit-exactly") {
  Rng rng(21);
  const DocumentIndex index = random_index(rng, 17, 5, false);
  const auto path = std::filesystem::temp_directory_path() / "vrag_retrieval_test.idx";
  index.save(path);
  const DocumentIndex loaded = DocumentIndex::load(path);
  CHECK(loaded == index);
  const std::vector<double> q = {0.1, -0.2, 0.3, 0.4, -0.5};
  CHECK(loaded.search(q, 17) == index.search(q, 17));

  {
    std::ofstream garbage(path, std::ios::binary | std::ios::trunc);
    garbage << "not an index";
  }
  CHECK_THROWS_AS(DocumentIndex::load(path), DataError);
  std::filesystem::remove(path);
}
