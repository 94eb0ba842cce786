// SPDX-License-Identifier: Apache-2.0
#include "vrag/numerics/tape.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace vrag {
namespace {

std::atomic<std::uint64_t> next_tape_id{1};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

void require_vector(const Tensor& a, const char* op) {
  if (a.rank() != 1 || a.empty()) {
    throw std::invalid_argument(std::string(op) + ": expected a non-empty vector, got " +
                                shape_string(a.shape()));
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Gradients

Tensor& Gradients::accumulator(const Parameter& p) {
  auto it = grads_.find(&p);
  if (it == grads_.end()) it = grads_.emplace(&p, Tensor::zeros_like(p.value)).first;
  return it->second;
}

const Tensor* Gradients::find(const Parameter& p) const {
  auto it = grads_.find(&p);
  return it == grads_.end() ? nullptr : &it->second;
}

double Gradients::at(const Parameter& p, std::size_t i) const {
  const Tensor* g = find(p);
  return g == nullptr ? 0.0 : (*g)[i];
}

void Gradients::add(const Gradients& other) {
  for (const auto& [param, grad] : other.grads_) {
    Tensor& mine = accumulator(*param);
    axpy(1.0, grad.values(), mine.values());
  }
}

void Gradients::scale(double factor) {
  for (auto& [param, grad] : grads_) {
    for (double& v : grad.values()) v *= factor;
  }
}

// ---------------------------------------------------------------------------
// GradientTape construction

GradientTape::GradientTape() : id_(next_tape_id.fetch_add(1)) {}

std::uint32_t GradientTape::check(Var v) const {
  if (v.tape_id_ != id_ || v.index_ >= nodes_.size()) {
    throw std::invalid_argument("variable does not belong to this tape");
  }
  return v.index_;
}

Var GradientTape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(id_, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tensor& GradientTape::value(Var v) const { return node(v).value; }

Var GradientTape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var GradientTape::parameter(const Parameter& p) {
  if (p.frozen) return constant(p.value);
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(id_, it->second);
  Node n;
  n.op = Op::Param;
  n.param = &p;
  n.needs_grad = true;
  n.value = p.value;
  Var v = push(std::move(n));
  param_nodes_.emplace(&p, v.index_);
  return v;
}

Var GradientTape::matvec(Var m, Var v) {
  const Node& nm = node(m);
  const Node& nv = node(v);
  require_vector(nv.value, "matvec");
  Node n;
  n.op = Op::MatVec;
  n.a = static_cast<std::int32_t>(check(m));
  n.b = static_cast<std::int32_t>(check(v));
  n.needs_grad = nm.needs_grad || nv.needs_grad;
  n.value = Tensor({nm.value.rows()});
  vrag::matvec(nm.value, nv.value.values(), n.value.values());
  return push(std::move(n));
}

Var GradientTape::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same_shape(na.value, nb.value, "add");
  Node n;
  n.op = Op::Add;
  n.a = static_cast<std::int32_t>(check(a));
  n.b = static_cast<std::int32_t>(check(b));
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value;
  axpy(1.0, nb.value.values(), n.value.values());
  return push(std::move(n));
}

Var GradientTape::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same_shape(na.value, nb.value, "sub");
  Node n;
  n.op = Op::Sub;
  n.a = static_cast<std::int32_t>(check(a));
  n.b = static_cast<std::int32_t>(check(b));
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value;
  axpy(-1.0, nb.value.values(), n.value.values());
  return push(std::move(n));
}

Var GradientTape::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same_shape(na.value, nb.value, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = static_cast<std::int32_t>(check(a));
  n.b = static_cast<std::int32_t>(check(b));
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= nb.value[i];
  return push(std::move(n));
}

Var GradientTape::scale(Var a, double factor) {
  const Node& na = node(a);
  Node n;
  n.op = Op::Scale;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.factor = factor;
  n.value = na.value;
  for (double& x : n.value.values()) x *= factor;
  return push(std::move(n));
}

Var GradientTape::tanh(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::Tanh;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (double& x : n.value.values()) x = std::tanh(x);
  return push(std::move(n));
}

Var GradientTape::gather_row(Var table, RowIndex row) {
  const RowIndex rows[] = {row};
  return mean_pool(table, rows);
}

Var GradientTape::mean_pool(Var table, std::span<const RowIndex> rows) {
  const Node& nt = node(table);
  if (nt.value.rank() != 2) {
    throw std::invalid_argument("mean_pool: table must be a matrix, got " +
                                shape_string(nt.value.shape()));
  }
  if (rows.empty()) throw std::invalid_argument("mean_pool over an empty row list");
  const std::size_t height = nt.value.rows();
  Node n;
  n.op = Op::MeanPool;
  n.a = static_cast<std::int32_t>(check(table));
  n.needs_grad = nt.needs_grad;
  n.rows.assign(rows.begin(), rows.end());
  n.value = Tensor({nt.value.cols()});
  const double w = 1.0 / static_cast<double>(rows.size());
  for (RowIndex r : rows) {
    if (r >= height) {
      throw std::out_of_range("row " + std::to_string(r) + " outside table of " +
                              std::to_string(height) + " rows");
    }
    axpy(w, nt.value.row(r), n.value.values());
  }
  return push(std::move(n));
}

Var GradientTape::softmax(Var a) {
  const Node& na = node(a);
  require_vector(na.value, "softmax");
  Node n;
  n.op = Op::Softmax;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.value = Tensor::vector(softmax_stable(na.value.values()));
  return push(std::move(n));
}

Var GradientTape::log_softmax(Var a) {
  const Node& na = node(a);
  require_vector(na.value, "log_softmax");
  Node n;
  n.op = Op::LogSoftmax;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.value = Tensor::vector(vrag::log_softmax(na.value.values()));
  return push(std::move(n));
}

Var GradientTape::log(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::Log;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (double& x : n.value.values()) x = std::log(x);
  return push(std::move(n));
}

Var GradientTape::dot(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  require_same_shape(na.value, nb.value, "dot");
  Node n;
  n.op = Op::Dot;
  n.a = static_cast<std::int32_t>(check(a));
  n.b = static_cast<std::int32_t>(check(b));
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = Tensor::scalar(vrag::dot(na.value.values(), nb.value.values()));
  return push(std::move(n));
}

Var GradientTape::log_sum_exp(Var a) {
  const Node& na = node(a);
  require_vector(na.value, "log_sum_exp");
  Node n;
  n.op = Op::LogSumExp;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.value = Tensor::scalar(vrag::log_sum_exp(na.value.values()));
  return push(std::move(n));
}

Var GradientTape::pick(Var a, std::size_t index) {
  const Node& na = node(a);
  if (index >= na.value.size()) {
    throw std::out_of_range("pick index " + std::to_string(index) + " outside tensor of " +
                            std::to_string(na.value.size()) + " values");
  }
  Node n;
  n.op = Op::Pick;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  n.index = index;
  n.value = Tensor::scalar(na.value[index]);
  return push(std::move(n));
}

Var GradientTape::stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw std::invalid_argument("stack of zero scalars");
  Node n;
  n.op = Op::Stack;
  std::vector<double> values;
  values.reserve(scalars.size());
  for (Var s : scalars) {
    const Node& ns = node(s);
    values.push_back(ns.value.item());
    n.inputs.push_back(check(s));
    n.needs_grad = n.needs_grad || ns.needs_grad;
  }
  n.value = Tensor::vector(std::move(values));
  return push(std::move(n));
}

Var GradientTape::sum(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::Sum;
  n.a = static_cast<std::int32_t>(check(a));
  n.needs_grad = na.needs_grad;
  double total = 0.0;
  for (double x : na.value.values()) total += x;
  n.value = Tensor::scalar(total);
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Reverse pass

Gradients GradientTape::backward(Var loss) const {
  Gradients grads;
  backward(loss, grads);
  return grads;
}

void GradientTape::backward(Var loss, Gradients& into) const {
  const std::uint32_t root = check(loss);
  if (nodes_[root].value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                shape_string(nodes_[root].value.shape()));
  }
  if (!nodes_[root].needs_grad) return;

  std::vector<Tensor> adjoints(root + 1);
  adjoints[root] = Tensor::scalar(1.0);

  // Parameter leaves accumulate straight into the caller's buffers.
  auto target = [&](std::int32_t idx) -> Tensor* {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    if (!n.needs_grad) return nullptr;
    if (n.op == Op::Param) return &into.accumulator(*n.param);
    Tensor& adj = adjoints[static_cast<std::size_t>(idx)];
    if (adj.empty()) adj = Tensor::zeros_like(n.value);
    return &adj;
  };

  for (std::int64_t i = root; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.op == Op::Constant || n.op == Op::Param) continue;
    const Tensor& dy = adjoints[static_cast<std::size_t>(i)];
    if (dy.empty()) continue;

    switch (n.op) {
      case Op::MatVec: {
        const Tensor& m = nodes_[n.a].value;
        const Tensor& v = nodes_[n.b].value;
        const std::size_t rows = m.rows();
        const std::size_t cols = m.cols();
        if (Tensor* gm = target(n.a)) {
          double* g = gm->values().data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double d = dy[r];
            if (d == 0.0) continue;
            double* grow = g + r * cols;
            for (std::size_t c = 0; c < cols; ++c) grow[c] += d * v[c];
          }
        }
        if (Tensor* gv = target(n.b)) {
          const double* mv = m.values().data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double d = dy[r];
            if (d == 0.0) continue;
            const double* mrow = mv + r * cols;
            for (std::size_t c = 0; c < cols; ++c) (*gv)[c] += d * mrow[c];
          }
        }
        break;
      }
      case Op::Add:
        if (Tensor* ga = target(n.a)) axpy(1.0, dy.values(), ga->values());
        if (Tensor* gb = target(n.b)) axpy(1.0, dy.values(), gb->values());
        break;
      case Op::Sub:
        if (Tensor* ga = target(n.a)) axpy(1.0, dy.values(), ga->values());
        if (Tensor* gb = target(n.b)) axpy(-1.0, dy.values(), gb->values());
        break;
      case Op::Mul: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        if (Tensor* ga = target(n.a)) {
          for (std::size_t k = 0; k < dy.size(); ++k) (*ga)[k] += dy[k] * b[k];
        }
        if (Tensor* gb = target(n.b)) {
          for (std::size_t k = 0; k < dy.size(); ++k) (*gb)[k] += dy[k] * a[k];
        }
        break;
      }
      case Op::Scale:
        if (Tensor* ga = target(n.a)) axpy(n.factor, dy.values(), ga->values());
        break;
      case Op::Tanh:
        if (Tensor* ga = target(n.a)) {
          for (std::size_t k = 0; k < dy.size(); ++k) {
            (*ga)[k] += dy[k] * (1.0 - n.value[k] * n.value[k]);
          }
        }
        break;
      case Op::MeanPool:
        if (Tensor* gt = target(n.a)) {
          const double w = 1.0 / static_cast<double>(n.rows.size());
          for (RowIndex r : n.rows) axpy(w, dy.values(), gt->row(r));
        }
        break;
      case Op::Softmax:
        if (Tensor* ga = target(n.a)) {
          const double inner = vrag::dot(dy.values(), n.value.values());
          for (std::size_t k = 0; k < dy.size(); ++k) {
            (*ga)[k] += n.value[k] * (dy[k] - inner);
          }
        }
        break;
      case Op::LogSoftmax:
        if (Tensor* ga = target(n.a)) {
          double total = 0.0;
          for (double d : dy.values()) total += d;
          for (std::size_t k = 0; k < dy.size(); ++k) {
            (*ga)[k] += dy[k] - std::exp(n.value[k]) * total;
          }
        }
        break;
      case Op::Log:
        if (Tensor* ga = target(n.a)) {
          const Tensor& a = nodes_[n.a].value;
          for (std::size_t k = 0; k < dy.size(); ++k) (*ga)[k] += dy[k] / a[k];
        }
        break;
      case Op::Dot: {
        const double d = dy.item();
        if (Tensor* ga = target(n.a)) axpy(d, nodes_[n.b].value.values(), ga->values());
        if (Tensor* gb = target(n.b)) axpy(d, nodes_[n.a].value.values(), gb->values());
        break;
      }
      case Op::LogSumExp:
        if (Tensor* ga = target(n.a)) {
          const Tensor& a = nodes_[n.a].value;
          const double d = dy.item();
          const double lse = n.value.item();
          for (std::size_t k = 0; k < a.size(); ++k) (*ga)[k] += d * std::exp(a[k] - lse);
        }
        break;
      case Op::Pick:
        if (Tensor* ga = target(n.a)) (*ga)[n.index] += dy.item();
        break;
      case Op::Stack:
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          if (Tensor* gs = target(static_cast<std::int32_t>(n.inputs[k]))) (*gs)[0] += dy[k];
        }
        break;
      case Op::Sum:
        if (Tensor* ga = target(n.a)) {
          const double d = dy.item();
          for (double& x : ga->values()) x += d;
        }
        break;
      case Op::Constant:
      case Op::Param:
        break;
    }
  }
}

}  // namespace vrag
