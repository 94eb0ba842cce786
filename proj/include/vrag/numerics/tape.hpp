// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrag/numerics/tensor.hpp"

namespace vrag {

using RowIndex = std::uint32_t;

/// A named trainable tensor. Frozen parameters enter a tape as constants and
/// therefore never receive gradient.
struct Parameter {
  std::string name;
  Tensor value;
  bool frozen = false;
};

/// Gradient buffers keyed by parameter identity. Accumulation is additive, so
/// per-worker buffers can be merged with add().
class Gradients {
 public:
  // Zero-initialised on first access.
  Tensor& accumulator(const Parameter& p);
  const Tensor* find(const Parameter& p) const;
  double at(const Parameter& p, std::size_t i) const;  // 0 when absent

  void add(const Gradients& other);
  void scale(double factor);
  void clear() { grads_.clear(); }
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<const Parameter*, Tensor> grads_;
};

/// Handle to a node on a GradientTape.
class Var {
 public:
  Var() = default;
  bool valid() const noexcept { return tape_id_ != 0; }

 private:
  friend class GradientTape;
  Var(std::uint64_t tape, std::uint32_t index) : tape_id_(tape), index_(index) {}
  std::uint64_t tape_id_ = 0;
  std::uint32_t index_ = 0;
};

/// Records primitive operations in evaluation order so that backward() can
/// replay their adjoints in reverse. Nodes are appended in topological order
/// by construction.
class GradientTape {
 public:
  GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;
  GradientTape(GradientTape&&) = default;
  GradientTape& operator=(GradientTape&&) = default;

  Var constant(Tensor value);
  Var parameter(const Parameter& p);

  const Tensor& value(Var v) const;
  double scalar(Var v) const { return value(v).item(); }
  std::size_t size() const { return nodes_.size(); }

  Var matvec(Var m, Var v);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var tanh(Var a);
  Var gather_row(Var table, RowIndex row);
  Var mean_pool(Var table, std::span<const RowIndex> rows);
  Var softmax(Var a);
  Var log_softmax(Var a);
  Var log(Var a);
  Var dot(Var a, Var b);
  Var log_sum_exp(Var a);
  Var pick(Var a, std::size_t index);
  Var stack(std::span<const Var> scalars);
  Var sum(Var a);

  /// Gradient of a scalar loss with respect to every non-frozen parameter
  /// recorded on this tape. Throws std::invalid_argument if `loss` belongs to
  /// another tape or is not a scalar.
  Gradients backward(Var loss) const;
  void backward(Var loss, Gradients& into) const;

 private:
  enum class Op : std::uint8_t {
    Constant, Param, MatVec, Add, Sub, Mul, Scale, Tanh, MeanPool, Softmax, LogSoftmax,
    Log, Dot, LogSumExp, Pick, Stack, Sum
  };

  struct Node {
    Op op = Op::Constant;
    std::int32_t a = -1;
    std::int32_t b = -1;
    bool needs_grad = false;
    double factor = 0.0;
    std::size_t index = 0;
    const Parameter* param = nullptr;
    std::vector<RowIndex> rows;
    std::vector<std::uint32_t> inputs;
    Tensor value;
  };

  std::uint32_t check(Var v) const;
  const Node& node(Var v) const { return nodes_[check(v)]; }
  Var push(Node n);

  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

}  // namespace vrag
