#ifndef FIREMU_TENSOR_HPP
#define FIREMU_TENSOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace firemu {

using Eigen::Index;

struct Shape4 {
  Index n = 1;
  Index c = 1;
  Index h = 1;
  Index w = 1;

  Index size() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

inline std::string to_string(const Shape4& s);

/// Dense NCHW array. Vectors use shape (1, length, 1, 1).
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tensor() = default;
  explicit Tensor(const Shape4& shape, Scalar fill = Scalar(0)) : shape_(shape), data_(Vector::Constant(shape.size(), fill)) {}
  Tensor(const Shape4& shape, Vector data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) throw std::invalid_argument("tensor data does not match shape " + to_string(shape_));
  }

  static Tensor vector(const Vector& v) { return Tensor({1, v.size(), 1, 1}, v); }
  static Tensor scalar(Scalar v) { return Tensor({1, 1, 1, 1}, v); }

  const Shape4& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  Vector& values() { return data_; }
  const Vector& values() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator()(Index n, Index c, Index y, Index x) { return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x]; }
  Scalar operator()(Index n, Index c, Index y, Index x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  /// Image n viewed as a (channels x pixels) row-major matrix.
  Eigen::Map<Matrix> image(Index n) { return {data() + n * shape_.c * shape_.plane(), shape_.c, shape_.plane()}; }
  Eigen::Map<const Matrix> image(Index n) const {
    return {data() + n * shape_.c * shape_.plane(), shape_.c, shape_.plane()};
  }

  template <typename To>
  Tensor<To> cast() const {
    return Tensor<To>(shape_, data_.template cast<To>());
  }

 private:
  Shape4 shape_{0, 0, 0, 0};
  Vector data_;
};

inline std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " + std::to_string(s.h) + ", " +
         std::to_string(s.w) + ")";
}

struct ConvSpec {
  Index kernel = 3;
  Index stride = 1;
  Index padding = 1;
};

inline Index conv_output_size(Index in, const ConvSpec& spec) {
  if (spec.stride <= 0) throw std::invalid_argument("stride must be positive");
  if (spec.kernel <= 0 || spec.padding < 0) throw std::invalid_argument("bad kernel or padding");
  const Index span = in + 2 * spec.padding - spec.kernel;
  if (span < 0) throw std::invalid_argument("input smaller than kernel");
  return span / spec.stride + 1;
}

inline Index conv_transpose_output_size(Index in, const ConvSpec& spec) {
  if (spec.stride <= 0) throw std::invalid_argument("stride must be positive");
  const Index out = spec.stride * (in - 1) + spec.kernel - 2 * spec.padding;
  if (out <= 0) throw std::invalid_argument("transposed convolution output would be empty");
  return out;
}

inline Index conv_parameter_count(Index c_in, Index c_out, Index kernel) { return kernel * kernel * c_in * c_out + c_out; }

namespace detail {

/// Unfolds one (C, H, W) image into a (C*k*k, OH*OW) patch matrix.
template <typename Scalar>
void im2col(const Scalar* image, Index channels, Index h, Index w, const ConvSpec& spec, Index oh, Index ow,
            Scalar* cols) {
  const Index k = spec.kernel;
  const Index s = spec.stride;
  const Index p = spec.padding;
  const Index pixels = oh * ow;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* plane = image + c * h * w;
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        Scalar* row = cols + ((c * k + ky) * k + kx) * pixels;
        for (Index oy = 0; oy < oh; ++oy) {
          const Index iy = oy * s - p + ky;
          Scalar* dst = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, Scalar(0));
            continue;
          }
          const Scalar* src = plane + iy * w;
          for (Index ox = 0; ox < ow; ++ox) {
            const Index ix = ox * s - p + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatter-adds patches back onto a zeroed (C, H, W) image.
template <typename Scalar>
void col2im(const Scalar* cols, Index channels, Index h, Index w, const ConvSpec& spec, Index oh, Index ow,
            Scalar* image) {
  const Index k = spec.kernel;
  const Index s = spec.stride;
  const Index p = spec.padding;
  const Index pixels = oh * ow;
  for (Index c = 0; c < channels; ++c) {
    Scalar* plane = image + c * h * w;
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Scalar* row = cols + ((c * k + ky) * k + kx) * pixels;
        for (Index oy = 0; oy < oh; ++oy) {
          const Index iy = oy * s - p + ky;
          if (iy < 0 || iy >= h) continue;
          const Scalar* src = row + oy * ow;
          Scalar* dst = plane + iy * w;
          for (Index ox = 0; ox < ow; ++ox) {
            const Index ix = ox * s - p + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

inline bool is_pointwise(const ConvSpec& spec) { return spec.kernel == 1 && spec.stride == 1 && spec.padding == 0; }

}  // namespace detail

/// Cross-correlation with zero padding. weights: (c_out, c_in, k, k); bias: c_out values.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, const Tensor<Scalar>& weights, const Tensor<Scalar>& bias,
                      const ConvSpec& spec) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  const auto& xs = x.shape();
  const auto& ws = weights.shape();
  if (ws.h != spec.kernel || ws.w != spec.kernel) throw std::invalid_argument("conv2d: kernel size mismatch");
  if (ws.c != xs.c) throw std::invalid_argument("conv2d: input has " + std::to_string(xs.c) + " channels, weights expect " + std::to_string(ws.c));
  if (bias.size() != ws.n) throw std::invalid_argument("conv2d: bias length mismatch");
  const Index oh = conv_output_size(xs.h, spec);
  const Index ow = conv_output_size(xs.w, spec);
  Tensor<Scalar> y({xs.n, ws.n, oh, ow});
  const Eigen::Map<const Matrix> wmat(weights.data(), ws.n, ws.c * ws.h * ws.w);
  Matrix cols;
  for (Index n = 0; n < xs.n; ++n) {
    auto out = y.image(n);
    if (detail::is_pointwise(spec)) {
      out.noalias() = wmat * x.image(n);
    } else {
      cols.resize(ws.c * spec.kernel * spec.kernel, oh * ow);
      detail::im2col(x.data() + n * xs.c * xs.plane(), xs.c, xs.h, xs.w, spec, oh, ow, cols.data());
      out.noalias() = wmat * cols;
    }
    out.colwise() += bias.values();
  }
  return y;
}

/// Adjoint of conv2d in its input. weights: (c_in, c_out, k, k) with c_in the
/// channel count of `x`, i.e. the same array a conv2d mapping c_out -> c_in uses.
template <typename Scalar>
Tensor<Scalar> conv2d_transpose(const Tensor<Scalar>& x, const Tensor<Scalar>& weights, const Tensor<Scalar>& bias,
                                const ConvSpec& spec) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  const auto& xs = x.shape();
  const auto& ws = weights.shape();
  if (ws.h != spec.kernel || ws.w != spec.kernel) throw std::invalid_argument("conv2d_transpose: kernel size mismatch");
  if (ws.n != xs.c) throw std::invalid_argument("conv2d_transpose: input has " + std::to_string(xs.c) + " channels, weights expect " + std::to_string(ws.n));
  if (bias.size() != ws.c) throw std::invalid_argument("conv2d_transpose: bias length mismatch");
  const Index oh = conv_transpose_output_size(xs.h, spec);
  const Index ow = conv_transpose_output_size(xs.w, spec);
  Tensor<Scalar> y({xs.n, ws.c, oh, ow});
  const Eigen::Map<const Matrix> wmat(weights.data(), ws.n, ws.c * ws.h * ws.w);
  Matrix cols;
  for (Index n = 0; n < xs.n; ++n) {
    auto out = y.image(n);
    if (detail::is_pointwise(spec)) {
      out.noalias() = wmat.transpose() * x.image(n);
    } else {
      cols.noalias() = wmat.transpose() * x.image(n);
      detail::col2im(cols.data(), ws.c, oh, ow, spec, xs.h, xs.w, y.data() + n * ws.c * oh * ow);
    }
    out.colwise() += bias.values();
  }
  return y;
}

template <typename Scalar>
struct ConvGradients {
  Tensor<Scalar> input;
  Tensor<Scalar> weights;
  Tensor<Scalar> bias;
};

template <typename Scalar>
ConvGradients<Scalar> conv2d_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& weights, const Tensor<Scalar>& dy,
                                      const ConvSpec& spec, bool need_input = true) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  const auto& xs = x.shape();
  const auto& ws = weights.shape();
  const auto& ys = dy.shape();
  ConvGradients<Scalar> g{Tensor<Scalar>(need_input ? xs : Shape4{0, 0, 0, 0}), Tensor<Scalar>(ws),
                          Tensor<Scalar>({1, ws.n, 1, 1})};
  const Eigen::Map<const Matrix> wmat(weights.data(), ws.n, ws.c * ws.h * ws.w);
  Eigen::Map<Matrix> dw(g.weights.data(), ws.n, ws.c * ws.h * ws.w);
  Matrix cols;
  for (Index n = 0; n < xs.n; ++n) {
    const auto dout = dy.image(n);
    g.bias.values() += dout.rowwise().sum();
    if (detail::is_pointwise(spec)) {
      dw.noalias() += dout * x.image(n).transpose();
      if (need_input) g.input.image(n).noalias() = wmat.transpose() * dout;
      continue;
    }
    cols.resize(ws.c * spec.kernel * spec.kernel, ys.h * ys.w);
    detail::im2col(x.data() + n * xs.c * xs.plane(), xs.c, xs.h, xs.w, spec, ys.h, ys.w, cols.data());
    dw.noalias() += dout * cols.transpose();
    if (need_input) {
      cols.noalias() = wmat.transpose() * dout;
      detail::col2im(cols.data(), xs.c, xs.h, xs.w, spec, ys.h, ys.w, g.input.data() + n * xs.c * xs.plane());
    }
  }
  return g;
}

template <typename Scalar>
ConvGradients<Scalar> conv2d_transpose_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& weights,
                                                const Tensor<Scalar>& dy, const ConvSpec& spec,
                                                bool need_input = true) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  const auto& xs = x.shape();
  const auto& ws = weights.shape();
  const auto& ys = dy.shape();
  ConvGradients<Scalar> g{Tensor<Scalar>(need_input ? xs : Shape4{0, 0, 0, 0}), Tensor<Scalar>(ws),
                          Tensor<Scalar>({1, ws.c, 1, 1})};
  const Eigen::Map<const Matrix> wmat(weights.data(), ws.n, ws.c * ws.h * ws.w);
  Eigen::Map<Matrix> dw(g.weights.data(), ws.n, ws.c * ws.h * ws.w);
  Matrix cols;
  for (Index n = 0; n < xs.n; ++n) {
    const auto dout = dy.image(n);
    g.bias.values() += dout.rowwise().sum();
    if (detail::is_pointwise(spec)) {
      dw.noalias() += x.image(n) * dout.transpose();
      if (need_input) g.input.image(n).noalias() = wmat * dout;
      continue;
    }
    // The output gradient unfolds with the geometry of the forward scatter.
    cols.resize(ws.c * spec.kernel * spec.kernel, xs.h * xs.w);
    detail::im2col(dy.data() + n * ys.c * ys.plane(), ys.c, ys.h, ys.w, spec, xs.h, xs.w, cols.data());
    dw.noalias() += x.image(n) * cols.transpose();
    if (need_input) g.input.image(n).noalias() = wmat * cols;
  }
  return g;
}

template <typename Scalar>
Scalar inner_product(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!(a.shape() == b.shape())) throw std::invalid_argument("inner product of mismatched shapes");
  return a.values().dot(b.values());
}

}  // namespace firemu

#endif  // FIREMU_TENSOR_HPP
