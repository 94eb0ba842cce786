// SPDX-License-Identifier: Apache-2.0
#include "vrag/models/model_bundle.hpp"

#include <fstream>
#include <stdexcept>

#include "vrag/errors.hpp"
#include "vrag/numerics/binary_io.hpp"

namespace vrag {
namespace {

constexpr std::uint64_t kCheckpointMagic = 0x54504b4347415256ull;  // "VRAGCKPT"
constexpr std::uint64_t kCheckpointVersion = 1;
constexpr double kInitRange = 0.1;

}  // namespace

void ModelDims::validate() const {
  if (vocab_size == 0 || embedding == 0 || retrieval == 0 || hidden == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
}

ModelBundle ModelBundle::init(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ModelBundle b;
  b.dims = dims;
  b.seed = seed;
  b.prior = EncoderParams::zeros("prior", dims.vocab_size, dims.embedding, dims.retrieval);
  b.posterior = EncoderParams::zeros("posterior", dims.vocab_size, dims.embedding, dims.retrieval);
  b.document = EncoderParams::zeros("document", dims.vocab_size, dims.embedding, dims.retrieval);
  b.decoder = DecoderParams::zeros(dims.vocab_size, dims.embedding, dims.hidden);
  if (dims.vocab_size <= b.decoder.bos) b.decoder.bos = 0;
  Rng rng(seed);
  b.prior.fill_uniform(rng, -kInitRange, kInitRange);
  b.posterior.fill_uniform(rng, -kInitRange, kInitRange);
  b.document.fill_uniform(rng, -kInitRange, kInitRange);
  b.decoder.fill_uniform(rng, -kInitRange, kInitRange);
  b.document.set_frozen(true);
  return b;
}

std::vector<Parameter*> ModelBundle::parameters() {
  std::vector<Parameter*> out;
  for (auto* group : {&prior, &posterior, &document}) {
    for (Parameter* p : group->parameters()) out.push_back(p);
  }
  for (Parameter* p : decoder.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> ModelBundle::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto* group : {&prior, &posterior, &document}) {
    for (const Parameter* p : group->parameters()) out.push_back(p);
  }
  for (const Parameter* p : decoder.parameters()) out.push_back(p);
  return out;
}

bool ModelBundle::operator==(const ModelBundle& other) const {
  if (dims != other.dims || seed != other.seed || decoder.bos != other.decoder.bos) return false;
  const auto mine = parameters();
  const auto theirs = other.parameters();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i]->name != theirs[i]->name || mine[i]->frozen != theirs[i]->frozen ||
        mine[i]->value != theirs[i]->value) {
      return false;
    }
  }
  return true;
}

void ModelBundle::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  binary::write_u64(out, kCheckpointMagic);
  binary::write_u64(out, kCheckpointVersion);
  for (std::size_t d : {dims.vocab_size, dims.embedding, dims.retrieval, dims.hidden}) binary::write_u64(out, d);
  binary::write_u64(out, seed);
  binary::write_u64(out, decoder.bos);
  const auto params = parameters();
  binary::write_u64(out, params.size());
  for (const Parameter* p : params) {
    binary::write_string(out, p->name);
    binary::write_u64(out, p->frozen ? 1 : 0);
    binary::write_u64(out, p->value.rank());
    for (std::size_t s : p->value.shape()) binary::write_u64(out, s);
    binary::write_f64s(out, p->value.values());
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

ModelBundle ModelBundle::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    if (binary::read_u64(in) != kCheckpointMagic) throw DataError(path.string() + ": not a model checkpoint");
    const std::uint64_t version = binary::read_u64(in);
    if (version != kCheckpointVersion) {
      throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    ModelDims dims;
    dims.vocab_size = binary::read_u64(in);
    dims.embedding = binary::read_u64(in);
    dims.retrieval = binary::read_u64(in);
    dims.hidden = binary::read_u64(in);
    const std::uint64_t seed = binary::read_u64(in);
    ModelBundle b = ModelBundle::init(dims, seed);
    b.decoder.bos = static_cast<TokenId>(binary::read_u64(in));
    auto params = b.parameters();
    if (binary::read_u64(in) != params.size()) throw DataError(path.string() + ": wrong tensor count");
    for (Parameter* p : params) {
      const std::string name = binary::read_string(in);
      if (name != p->name) throw DataError(path.string() + ": expected tensor " + p->name + ", found " + name);
      p->frozen = binary::read_u64(in) != 0;
      std::vector<std::size_t> shape(binary::read_u64(in));
      for (std::size_t& s : shape) s = binary::read_u64(in);
      if (shape != p->value.shape()) {
        throw DataError(path.string() + ": tensor " + name + " has shape " + shape_string(shape) + ", expected " +
                        shape_string(p->value.shape()));
      }
      binary::read_f64s(in, p->value.values());
    }
    b.decoder.validate();
    return b;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace vrag
