// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vrag {

/// Dense row-major tensor of 64-bit floats. Rank 0 is a scalar, rank 1 a
/// vector, rank 2 a matrix; nothing in this project needs more.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros_like(const Tensor& other);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  // Only valid for single-element tensors.
  double item() const;

  void fill(double value);

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

bool all_finite(std::span<const double> values);

/// Softmax with max-shift. Throws std::invalid_argument on empty input.
std::vector<double> softmax_stable(std::span<const double> logits);

/// log(softmax(logits)) computed as logits - log_sum_exp(logits).
std::vector<double> log_softmax(std::span<const double> logits);

/// log(sum(exp(logits))) with max-shift. Throws std::invalid_argument on empty input.
double log_sum_exp(std::span<const double> logits);

double dot(std::span<const double> a, std::span<const double> b);

// out = M * v for row-major M of shape (out.size(), v.size()).
void matvec(const Tensor& m, std::span<const double> v, std::span<double> out);

}  // namespace vrag
