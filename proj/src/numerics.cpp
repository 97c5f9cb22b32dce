// SPDX-License-Identifier: Apache-2.0
#include "snn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snn/error.hpp"

namespace snn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw InvalidArgument("tensor shape " + shape_str(shape_) + " does not match " +
                          std::to_string(data_.size()) + " values");
  }
}

std::size_t Tensor::flat_index(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size()) throw InvalidArgument("tensor index rank mismatch");
  std::size_t flat = 0;
  std::size_t d = 0;
  for (auto i : idx) {
    if (i >= shape_[d]) throw InvalidArgument("tensor index out of range");
    flat = flat * shape_[d] + i;
    ++d;
  }
  return flat;
}

double& Tensor::at(std::initializer_list<std::size_t> idx) { return data_[flat_index(idx)]; }
double Tensor::at(std::initializer_list<std::size_t> idx) const {
  return data_[flat_index(idx)];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw InvalidArgument("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice(std::size_t i) const {
  if (shape_.empty() || i >= shape_[0]) throw InvalidArgument("slice index out of range");
  Shape sub(shape_.begin() + 1, shape_.end());
  const std::size_t n = shape_numel(sub);
  std::vector<double> values(data_.begin() + static_cast<std::ptrdiff_t>(i * n),
                             data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  return Tensor(std::move(sub), std::move(values));
}

void Tensor::set_slice(std::size_t i, const Tensor& value) {
  if (shape_.empty() || i >= shape_[0]) throw InvalidArgument("slice index out of range");
  if (!std::equal(shape_.begin() + 1, shape_.end(), value.shape_.begin(), value.shape_.end())) {
    throw InvalidArgument("slice shape mismatch: " + shape_str(value.shape_));
  }
  std::copy(value.data_.begin(), value.data_.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(i * value.size()));
}

void require_finite(const Tensor& t, std::string_view what) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NumericError(std::string(what) + ": non-finite value at flat index " +
                         std::to_string(i));
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
  }
}

namespace {

template <typename Op>
Tensor zip(const Tensor& a, const Tensor& b, std::string_view what, Op op) {
  require_same_shape(a, b, what);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  require_finite(out, what);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor hadamard(const Tensor& a, const Tensor& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
  require_finite(out, "scale");
  return out;
}

void axpy(Tensor& a, double factor, const Tensor& b) {
  require_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += factor * b[i];
  require_finite(a, "axpy");
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0) throw InvalidArgument("conv stride must be positive");
  const std::size_t padded = in + 2 * padding;
  if (kernel == 0 || kernel > padded) {
    throw InvalidArgument("kernel " + std::to_string(kernel) + " exceeds padded extent " +
                          std::to_string(padded));
  }
  if ((padded - kernel) % stride != 0) {
    throw InvalidArgument("conv output size is not exact for extent " + std::to_string(in) +
                          ", kernel " + std::to_string(kernel) + ", stride " +
                          std::to_string(stride));
  }
  return (padded - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t batch, channels, height, width;
  std::size_t filters, kh, kw;
  std::size_t out_h, out_w;
  std::size_t stride, padding;
};

ConvGeometry conv_geometry(const Shape& in, const Shape& k, std::size_t stride,
                           std::size_t padding) {
  if (in.size() != 4 || k.size() != 4) {
    throw InvalidArgument("conv2d expects 4-D input and kernels, got " + shape_str(in) +
                          " and " + shape_str(k));
  }
  if (in[1] != k[1]) {
    throw InvalidArgument("conv2d channel mismatch: input " + shape_str(in) + ", kernels " +
                          shape_str(k));
  }
  ConvGeometry g{in[0], in[1], in[2], in[3], k[0], k[2], k[3], 0, 0, stride, padding};
  g.out_h = conv_output_extent(g.height, g.kh, stride, padding);
  g.out_w = conv_output_extent(g.width, g.kw, stride, padding);
  return g;
}

// Input coordinate for output position `o` and tap `k`, or -1 when in padding.
inline std::ptrdiff_t source(std::size_t o, std::size_t k, const ConvGeometry& g,
                             std::size_t extent) {
  const auto pos = static_cast<std::ptrdiff_t>(o * g.stride + k) -
                   static_cast<std::ptrdiff_t>(g.padding);
  return (pos < 0 || pos >= static_cast<std::ptrdiff_t>(extent)) ? -1 : pos;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride,
              std::size_t padding) {
  const auto g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
  Tensor out({g.batch, g.filters, g.out_h, g.out_w});
  const double* x = input.data().data();
  const double* w = kernels.data().data();
  double* y = out.data().data();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t f = 0; f < g.filters; ++f) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          double acc = 0.0;
          for (std::size_t c = 0; c < g.channels; ++c) {
            const double* xc = x + ((b * g.channels + c) * g.height) * g.width;
            const double* wc = w + ((f * g.channels + c) * g.kh) * g.kw;
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
              const auto iy = source(oy, ky, g, g.height);
              if (iy < 0) continue;
              for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto ix = source(ox, kx, g, g.width);
                if (ix < 0) continue;
                acc += xc[iy * static_cast<std::ptrdiff_t>(g.width) + ix] * wc[ky * g.kw + kx];
              }
            }
          }
          y[((b * g.filters + f) * g.out_h + oy) * g.out_w + ox] = acc;
        }
      }
    }
  }
  require_finite(out, "conv2d");
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels,
                             const Shape& input_shape, std::size_t stride, std::size_t padding) {
  const auto g = conv_geometry(input_shape, kernels.shape(), stride, padding);
  const Shape expected{g.batch, g.filters, g.out_h, g.out_w};
  if (grad_out.shape() != expected) {
    throw InvalidArgument("conv2d_backward_input: grad shape " + shape_str(grad_out.shape()) +
                          ", expected " + shape_str(expected));
  }
  Tensor grad_in(input_shape);
  const double* gy = grad_out.data().data();
  const double* w = kernels.data().data();
  double* gx = grad_in.data().data();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t f = 0; f < g.filters; ++f) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const double go = gy[((b * g.filters + f) * g.out_h + oy) * g.out_w + ox];
          if (go == 0.0) continue;
          for (std::size_t c = 0; c < g.channels; ++c) {
            double* gxc = gx + ((b * g.channels + c) * g.height) * g.width;
            const double* wc = w + ((f * g.channels + c) * g.kh) * g.kw;
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
              const auto iy = source(oy, ky, g, g.height);
              if (iy < 0) continue;
              for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto ix = source(ox, kx, g, g.width);
                if (ix < 0) continue;
                gxc[iy * static_cast<std::ptrdiff_t>(g.width) + ix] += go * wc[ky * g.kw + kx];
              }
            }
          }
        }
      }
    }
  }
  require_finite(grad_in, "conv2d_backward_input");
  return grad_in;
}

Tensor conv2d_backward_kernels(const Tensor& input, const Tensor& grad_out,
                               const Shape& kernel_shape, std::size_t stride,
                               std::size_t padding) {
  const auto g = conv_geometry(input.shape(), kernel_shape, stride, padding);
  const Shape expected{g.batch, g.filters, g.out_h, g.out_w};
  if (grad_out.shape() != expected) {
    throw InvalidArgument("conv2d_backward_kernels: grad shape " +
                          shape_str(grad_out.shape()) + ", expected " + shape_str(expected));
  }
  Tensor grad_k(kernel_shape);
  const double* x = input.data().data();
  const double* gy = grad_out.data().data();
  double* gk = grad_k.data().data();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t f = 0; f < g.filters; ++f) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const double go = gy[((b * g.filters + f) * g.out_h + oy) * g.out_w + ox];
          if (go == 0.0) continue;
          for (std::size_t c = 0; c < g.channels; ++c) {
            const double* xc = x + ((b * g.channels + c) * g.height) * g.width;
            double* gkc = gk + ((f * g.channels + c) * g.kh) * g.kw;
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
              const auto iy = source(oy, ky, g, g.height);
              if (iy < 0) continue;
              for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const auto ix = source(ox, kx, g, g.width);
                if (ix < 0) continue;
                gkc[ky * g.kw + kx] += go * xc[iy * static_cast<std::ptrdiff_t>(g.width) + ix];
              }
            }
          }
        }
      }
    }
  }
  require_finite(grad_k, "conv2d_backward_kernels");
  return grad_k;
}

PoolResult maxpool2d(const Tensor& input, std::size_t size) {
  const auto& s = input.shape();
  if (s.size() != 4) throw InvalidArgument("maxpool2d expects 4-D input, got " + shape_str(s));
  if (size == 0) throw InvalidArgument("maxpool2d window must be positive");
  if (s[2] % size != 0 || s[3] % size != 0) {
    throw InvalidArgument("maxpool2d: spatial dims " + shape_str(s) +
                          " not divisible by window " + std::to_string(size));
  }
  const std::size_t planes = s[0] * s[1];
  const std::size_t h = s[2], w = s[3], oh = h / size, ow = w / size;
  PoolResult r{Tensor({s[0], s[1], oh, ow}), std::vector<std::size_t>(planes * oh * ow)};
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        // Row-major window scan with strict '>' keeps the lowest flat index on ties.
        std::size_t best = (p * h + oy * size) * w + ox * size;
        for (std::size_t dy = 0; dy < size; ++dy) {
          for (std::size_t dx = 0; dx < size; ++dx) {
            const std::size_t idx = (p * h + oy * size + dy) * w + ox * size + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        r.output[o] = input[best];
        r.argmax[o] = best;
      }
    }
  }
  require_finite(r.output, "maxpool2d");
  return r;
}

Tensor maxpool2d_backward(const Tensor& grad_out, std::span<const std::size_t> argmax,
                          const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) {
    throw InvalidArgument("maxpool2d_backward: index map size mismatch");
  }
  Tensor grad_in(input_shape);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    if (argmax[i] >= grad_in.size()) throw InvalidArgument("maxpool2d_backward: bad index");
    grad_in[argmax[i]] += grad_out[i];
  }
  return grad_in;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw InvalidArgument("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      out[i * n + j] = acc;
    }
  }
  require_finite(out, "matmul");
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw InvalidArgument("transpose expects a 2-D tensor");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("Rng::below requires n > 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace snn
