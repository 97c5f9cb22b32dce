// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace snn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of doubles.
///
/// The product of the shape always equals the element count. Public
/// operations in this header reject non-finite results with NumericError
/// instead of propagating them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::initializer_list<std::size_t> idx);
  double at(std::initializer_list<std::size_t> idx) const;

  /// Same data viewed under a new shape with identical element count.
  Tensor reshaped(Shape shape) const;

  /// Slice `i` along the leading axis.
  Tensor slice(std::size_t i) const;
  void set_slice(std::size_t i, const Tensor& value);

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t flat_index(std::initializer_list<std::size_t> idx) const;

  Shape shape_;
  std::vector<double> data_;
};

/// Throws NumericError naming `what` when any element is NaN or infinite.
void require_finite(const Tensor& t, std::string_view what);
void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a += factor * b, in place.
void axpy(Tensor& a, double factor, const Tensor& b);
/// Sum of elements in flat-index order.
double sum(const Tensor& t);

/// Output spatial extent of a valid cross-correlation; throws if not exact.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

/// 2-D cross-correlation (no kernel flip).
/// input [B,C,H,W], kernels [F,C,Kh,Kw] -> [B,F,H',W'].
/// Each output accumulates over c, then ky, then kx, all ascending.
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride = 1,
              std::size_t padding = 0);

/// Gradient of conv2d w.r.t. its input, given dLoss/dOutput.
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels,
                             const Shape& input_shape, std::size_t stride = 1,
                             std::size_t padding = 0);

/// Gradient of conv2d w.r.t. its kernels, given dLoss/dOutput.
Tensor conv2d_backward_kernels(const Tensor& input, const Tensor& grad_out,
                               const Shape& kernel_shape, std::size_t stride = 1,
                               std::size_t padding = 0);

struct PoolResult {
  Tensor output;
  /// Flat index into the input tensor of each output cell's winner.
  std::vector<std::size_t> argmax;
};

/// Non-overlapping max pooling with window == stride == `size`.
/// Ties go to the lowest flat input index.
PoolResult maxpool2d(const Tensor& input, std::size_t size);

/// Routes each output gradient to its recorded winner.
Tensor maxpool2d_backward(const Tensor& grad_out, std::span<const std::size_t> argmax,
                          const Shape& input_shape);

/// [M,K] x [K,N]. Each output sums over k in ascending order, so results
/// are bit-stable and independent of blocking.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Deterministic generator: std::mt19937_64 (sequence fixed by the C++
/// standard) with owned conversions, so draws are identical on every
/// platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);
/// FNV-1a over bytes, finalized with mix64.
std::uint64_t hash_string(std::string_view s);

}  // namespace snn
