// Copyright 2026  The antispoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "antispoof/nnet/layers.h"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <sstream>

namespace antispoof::nnet {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
// Overlapping row windows: row t starts `stride` elements after row t - 1.
template <typename T>
using WindowMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

void ExpectRank(const std::string& layer, const Shape& shape, std::size_t rank) {
  if (shape.size() != rank)
    throw ShapeError(layer + ": expected rank " + std::to_string(rank) +
                     " input, got " + ShapeString(shape));
}

void ExpectSameShape(const std::string& layer, const Shape& expected,
                     const Shape& got) {
  if (expected != got)
    throw ShapeError(layer + ": gradient shape " + ShapeString(got) +
                     " does not match " + ShapeString(expected));
}

template <typename T>
void AccumulateInto(Parameter<T>& p, const T* src) {
  T* dst = p.grad.data();
  for (std::size_t i = 0; i < p.grad.size(); ++i) dst[i] += src[i];
  p.has_grad = true;
}

// Rows of the "same"-padded patch matrix of one [F, T, C] example:
// row (f, t) holds x[f + i - kf/2, t + j - kt/2, c] in (i, j, c) order.
template <typename T>
void Im2Col(const T* x, std::size_t F, std::size_t Tn, std::size_t C,
            std::size_t kf, std::size_t kt, T* cols) {
  const auto pf = static_cast<std::ptrdiff_t>(kf / 2);
  const auto pt = static_cast<std::ptrdiff_t>(kt / 2);
  const std::size_t row_len = kf * kt * C;
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < Tn; ++t) {
      T* row = cols + (f * Tn + t) * row_len;
      for (std::size_t i = 0; i < kf; ++i) {
        const auto sf = static_cast<std::ptrdiff_t>(f + i) - pf;
        for (std::size_t j = 0; j < kt; ++j) {
          const auto st = static_cast<std::ptrdiff_t>(t + j) - pt;
          T* dst = row + (i * kt + j) * C;
          if (sf < 0 || sf >= static_cast<std::ptrdiff_t>(F) || st < 0 ||
              st >= static_cast<std::ptrdiff_t>(Tn)) {
            std::fill(dst, dst + C, T(0));
          } else {
            const T* src = x + (static_cast<std::size_t>(sf) * Tn +
                                static_cast<std::size_t>(st)) * C;
            std::copy(src, src + C, dst);
          }
        }
      }
    }
  }
}

template <typename T>
void Col2Im(const T* cols, std::size_t F, std::size_t Tn, std::size_t C,
            std::size_t kf, std::size_t kt, T* dx) {
  const auto pf = static_cast<std::ptrdiff_t>(kf / 2);
  const auto pt = static_cast<std::ptrdiff_t>(kt / 2);
  const std::size_t row_len = kf * kt * C;
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < Tn; ++t) {
      const T* row = cols + (f * Tn + t) * row_len;
      for (std::size_t i = 0; i < kf; ++i) {
        const auto sf = static_cast<std::ptrdiff_t>(f + i) - pf;
        if (sf < 0 || sf >= static_cast<std::ptrdiff_t>(F)) continue;
        for (std::size_t j = 0; j < kt; ++j) {
          const auto st = static_cast<std::ptrdiff_t>(t + j) - pt;
          if (st < 0 || st >= static_cast<std::ptrdiff_t>(Tn)) continue;
          const T* src = row + (i * kt + j) * C;
          T* dst = dx + (static_cast<std::size_t>(sf) * Tn +
                         static_cast<std::size_t>(st)) * C;
          for (std::size_t c = 0; c < C; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "x" : "") << shape[i];
  ss << ']';
  return ss.str();
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, std::size_t in_channels,
                  std::size_t out_channels, std::size_t kernel_f,
                  std::size_t kernel_t)
    : Layer<T>(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      kf_(kernel_f),
      kt_(kernel_t),
      weight_(this->name_ + ".weight", {kernel_f, kernel_t, in_channels, out_channels}),
      bias_(this->name_ + ".bias", {out_channels}) {
  if (kf_ % 2 == 0 || kt_ % 2 == 0)
    throw ShapeError(this->name_ + ": kernel sizes must be odd for same padding");
}

template <typename T>
Shape Conv2d<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 4);
  if (input[3] != in_)
    throw ShapeError(this->name_ + ": expected " + std::to_string(in_) +
                     " input channels, got " + ShapeString(input));
  return {input[0], input[1], input[2], out_};
}

template <typename T>
Tensor<T> Conv2d<T>::Infer(const Tensor<T>& x) const {
  const Shape out_shape = OutputShape(x.shape());
  const std::size_t B = x.dim(0), F = x.dim(1), Tn = x.dim(2);
  const std::size_t P = F * Tn, K = kf_ * kt_ * in_;
  Tensor<T> y(out_shape);
  ConstMatMap<T> w(weight_.value.data(), K, out_);
  const auto bias = ConstVecMap<T>(bias_.value.data(), out_).transpose();
  AlignedVector<T> cols(K == in_ ? 0 : P * K);
  for (std::size_t b = 0; b < B; ++b) {
    const T* xb = x.data() + b * P * in_;
    const T* colp = xb;
    if (K != in_) {
      Im2Col(xb, F, Tn, in_, kf_, kt_, cols.data());
      colp = cols.data();
    }
    MatMap<T> yb(y.data() + b * P * out_, P, out_);
    yb.noalias() = ConstMatMap<T>(colp, P, K) * w;
    yb.rowwise() += bias;
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::Train(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> Conv2d<T>::Backward(const Tensor<T>& dy) {
  const Shape& in_shape = input_.shape();
  ExpectSameShape(this->name_, OutputShape(in_shape), dy.shape());
  const std::size_t B = in_shape[0], F = in_shape[1], Tn = in_shape[2];
  const std::size_t P = F * Tn, K = kf_ * kt_ * in_;
  RowMatrix<T> dw = RowMatrix<T>::Zero(K, out_);
  Eigen::Matrix<T, 1, Eigen::Dynamic> db = Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(out_);
  ConstMatMap<T> w(weight_.value.data(), K, out_);
  Tensor<T> dx;
  if (this->input_grad_) dx = Tensor<T>(in_shape);
  AlignedVector<T> cols(K == in_ ? 0 : P * K);
  RowMatrix<T> dcols;
  for (std::size_t b = 0; b < B; ++b) {
    const T* xb = input_.data() + b * P * in_;
    const T* colp = xb;
    if (K != in_) {
      Im2Col(xb, F, Tn, in_, kf_, kt_, cols.data());
      colp = cols.data();
    }
    ConstMatMap<T> colm(colp, P, K);
    ConstMatMap<T> dyb(dy.data() + b * P * out_, P, out_);
    dw.noalias() += colm.transpose() * dyb;
    db += dyb.colwise().sum();
    if (this->input_grad_) {
      if (K == in_) {
        MatMap<T>(dx.data() + b * P * in_, P, in_).noalias() = dyb * w.transpose();
      } else {
        dcols.noalias() = dyb * w.transpose();
        Col2Im(dcols.data(), F, Tn, in_, kf_, kt_, dx.data() + b * P * in_);
      }
    }
  }
  AccumulateInto(weight_, dw.data());
  AccumulateInto(bias_, db.data());
  return dx;
}

// ---------------------------------------------------------------- MaxPool2d

template <typename T>
MaxPool2d<T>::MaxPool2d(std::string name, std::size_t pool_f, std::size_t pool_t)
    : Layer<T>(std::move(name)), pf_(pool_f), pt_(pool_t) {
  if (pf_ == 0 || pt_ == 0) throw ShapeError(this->name_ + ": zero pool size");
}

template <typename T>
Shape MaxPool2d<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 4);
  if (input[1] % pf_ != 0 || input[2] % pt_ != 0)
    throw ShapeError(this->name_ + ": " + ShapeString(input) +
                     " is not divisible by pool " + std::to_string(pf_) + "x" +
                     std::to_string(pt_));
  return {input[0], input[1] / pf_, input[2] / pt_, input[3]};
}

template <typename T>
Tensor<T> MaxPool2d<T>::Pool(const Tensor<T>& x,
                             std::vector<std::size_t>* argmax) const {
  const Shape out_shape = OutputShape(x.shape());
  const std::size_t B = x.dim(0), F = x.dim(1), Tn = x.dim(2), C = x.dim(3);
  const std::size_t Fo = out_shape[1], To = out_shape[2];
  Tensor<T> y(out_shape);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < Fo; ++f)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t c = 0; c < C; ++c, ++o) {
          std::size_t best = ((b * F + f * pf_) * Tn + t * pt_) * C + c;
          for (std::size_t i = 0; i < pf_; ++i)
            for (std::size_t j = 0; j < pt_; ++j) {
              const std::size_t idx =
                  ((b * F + f * pf_ + i) * Tn + t * pt_ + j) * C + c;
              if (x[idx] > x[best]) best = idx;
            }
          y[o] = x[best];
          if (argmax) (*argmax)[o] = best;
        }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::Infer(const Tensor<T>& x) const {
  return Pool(x, nullptr);
}

template <typename T>
Tensor<T> MaxPool2d<T>::Train(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return Pool(x, &argmax_);
}

template <typename T>
Tensor<T> MaxPool2d<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, OutputShape(input_shape_), dy.shape());
  Tensor<T> dx(input_shape_);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax_[o]] += dy[o];
  return dx;
}

// ---------------------------------------------------------------- TimeTrim

template <typename T>
TimeTrim<T>::TimeTrim(std::string name, std::size_t multiple)
    : Layer<T>(std::move(name)), multiple_(multiple) {
  if (multiple_ == 0) throw ShapeError(this->name_ + ": zero multiple");
}

template <typename T>
Shape TimeTrim<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 4);
  const std::size_t kept = input[2] - input[2] % multiple_;
  if (kept == 0)
    throw ShapeError(this->name_ + ": fewer than " + std::to_string(multiple_) +
                     " time frames in " + ShapeString(input));
  return {input[0], input[1], kept, input[3]};
}

template <typename T>
Tensor<T> TimeTrim<T>::Infer(const Tensor<T>& x) const {
  const Shape out_shape = OutputShape(x.shape());
  if (out_shape == x.shape()) return x;
  const std::size_t rows = x.dim(0) * x.dim(1), Tn = x.dim(2), C = x.dim(3);
  const std::size_t To = out_shape[2];
  Tensor<T> y(out_shape);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(x.data() + r * Tn * C, x.data() + (r * Tn + To) * C,
              y.data() + r * To * C);
  return y;
}

template <typename T>
Tensor<T> TimeTrim<T>::Train(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return Infer(x);
}

template <typename T>
Tensor<T> TimeTrim<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, OutputShape(input_shape_), dy.shape());
  if (dy.shape() == input_shape_) return dy;
  const std::size_t rows = input_shape_[0] * input_shape_[1];
  const std::size_t Tn = input_shape_[2], C = input_shape_[3], To = dy.dim(2);
  Tensor<T> dx(input_shape_);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(dy.data() + r * To * C, dy.data() + (r + 1) * To * C,
              dx.data() + r * Tn * C);
  return dx;
}

// ---------------------------------------------------------------- Mfm

template <typename T>
Shape Mfm<T>::OutputShape(const Shape& input) const {
  if (input.empty() || input.back() % 2 != 0)
    throw ShapeError(this->name_ + ": channel count must be even, got " +
                     ShapeString(input));
  Shape out = input;
  out.back() /= 2;
  return out;
}

template <typename T>
Tensor<T> Mfm<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y(OutputShape(x.shape()));
  for (std::size_t o = 0; o < y.size(); ++o)
    y[o] = std::max(x[2 * o], x[2 * o + 1]);
  return y;
}

template <typename T>
Tensor<T> Mfm<T>::Train(const Tensor<T>& x) {
  input_shape_ = x.shape();
  Tensor<T> y(OutputShape(x.shape()));
  second_wins_.assign(y.size(), 0);
  for (std::size_t o = 0; o < y.size(); ++o) {
    const bool second = x[2 * o + 1] > x[2 * o];
    second_wins_[o] = second;
    y[o] = second ? x[2 * o + 1] : x[2 * o];
  }
  return y;
}

template <typename T>
Tensor<T> Mfm<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, OutputShape(input_shape_), dy.shape());
  Tensor<T> dx(input_shape_);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[2 * o + second_wins_[o]] = dy[o];
  return dx;
}

// ---------------------------------------------------------------- TemporalMeanPool

template <typename T>
Shape TemporalMeanPool<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 4);
  if (input[2] == 0) throw ShapeError(this->name_ + ": empty time axis");
  return {input[0], input[1], input[3]};
}

template <typename T>
Tensor<T> TemporalMeanPool<T>::Infer(const Tensor<T>& x) const {
  const Shape out_shape = OutputShape(x.shape());
  const std::size_t rows = x.dim(0) * x.dim(1), Tn = x.dim(2), C = x.dim(3);
  Tensor<T> y(out_shape);
  const T scale = T(1) / static_cast<T>(Tn);
  for (std::size_t r = 0; r < rows; ++r) {
    T* out = y.data() + r * C;
    for (std::size_t t = 0; t < Tn; ++t) {
      const T* in = x.data() + (r * Tn + t) * C;
      for (std::size_t c = 0; c < C; ++c) out[c] += in[c];
    }
    for (std::size_t c = 0; c < C; ++c) out[c] *= scale;
  }
  return y;
}

template <typename T>
Tensor<T> TemporalMeanPool<T>::Train(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return Infer(x);
}

template <typename T>
Tensor<T> TemporalMeanPool<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, OutputShape(input_shape_), dy.shape());
  const std::size_t rows = input_shape_[0] * input_shape_[1];
  const std::size_t Tn = input_shape_[2], C = input_shape_[3];
  const T scale = T(1) / static_cast<T>(Tn);
  Tensor<T> dx(input_shape_);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < Tn; ++t)
      for (std::size_t c = 0; c < C; ++c)
        dx[(r * Tn + t) * C + c] = dy[r * C + c] * scale;
  return dx;
}

// ---------------------------------------------------------------- Flatten

template <typename T>
Shape Flatten<T>::OutputShape(const Shape& input) const {
  if (input.empty()) throw ShapeError(this->name_ + ": rank-0 input");
  return {input[0], NumElements(input) / std::max<std::size_t>(1, input[0])};
}

template <typename T>
Tensor<T> Flatten<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y = x;
  y.Reshape(OutputShape(x.shape()));
  return y;
}

template <typename T>
Tensor<T> Flatten<T>::Train(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return Infer(x);
}

template <typename T>
Tensor<T> Flatten<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  dx.Reshape(input_shape_);
  return dx;
}

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::string name, std::size_t in, std::size_t out)
    : Layer<T>(std::move(name)),
      in_(in),
      out_(out),
      weight_(this->name_ + ".weight", {in, out}),
      bias_(this->name_ + ".bias", {out}) {}

template <typename T>
Shape Dense<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 2);
  if (input[1] != in_)
    throw ShapeError(this->name_ + ": expected " + std::to_string(in_) +
                     " inputs, got " + ShapeString(input));
  return {input[0], out_};
}

template <typename T>
Tensor<T> Dense<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y(OutputShape(x.shape()));
  const std::size_t B = x.dim(0);
  MatMap<T> ym(y.data(), B, out_);
  ym.noalias() = ConstMatMap<T>(x.data(), B, in_) *
                 ConstMatMap<T>(weight_.value.data(), in_, out_);
  ym.rowwise() += ConstVecMap<T>(bias_.value.data(), out_).transpose();
  return y;
}

template <typename T>
Tensor<T> Dense<T>::Train(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> Dense<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, OutputShape(input_.shape()), dy.shape());
  const std::size_t B = dy.dim(0);
  ConstMatMap<T> dym(dy.data(), B, out_);
  ConstMatMap<T> xm(input_.data(), B, in_);
  MatMap<T>(weight_.grad.data(), in_, out_).noalias() += xm.transpose() * dym;
  VecMap<T>(bias_.grad.data(), out_) += dym.colwise().sum().transpose();
  weight_.has_grad = bias_.has_grad = true;
  Tensor<T> dx;
  if (this->input_grad_) {
    dx = Tensor<T>(input_.shape());
    MatMap<T>(dx.data(), B, in_).noalias() =
        dym * ConstMatMap<T>(weight_.value.data(), in_, out_).transpose();
  }
  return dx;
}

// ---------------------------------------------------------------- LeakyRelu / Abs

template <typename T>
Tensor<T> LeakyRelu<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : slope_ * x[i];
  return y;
}

template <typename T>
Tensor<T> LeakyRelu<T>::Train(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> LeakyRelu<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, input_.shape(), dy.shape());
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i)
    dx[i] = input_[i] > T(0) ? dy[i] : slope_ * dy[i];
  return dx;
}

template <typename T>
Tensor<T> Abs<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::abs(x[i]);
  return y;
}

template <typename T>
Tensor<T> Abs<T>::Train(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> Abs<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, input_.shape(), dy.shape());
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i)
    dx[i] = input_[i] > T(0) ? dy[i] : (input_[i] < T(0) ? -dy[i] : T(0));
  return dx;
}

// ---------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(std::string name, double rate, Rng* rng)
    : Layer<T>(std::move(name)), rate_(rate), rng_(rng) {
  if (!(rate_ >= 0.0 && rate_ < 1.0))
    throw ConfigError(this->name_ + ": dropout rate must be in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::Train(const Tensor<T>& x) {
  if (rate_ == 0.0) {
    mask_.assign(x.size(), T(1));
    return x;
  }
  if (!rng_) throw Error(this->name_ + ": dropout in training needs a generator");
  std::bernoulli_distribution keep(1.0 - rate_);
  const T scale = static_cast<T>(1.0 / (1.0 - rate_));
  mask_.resize(x.size());
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = keep(*rng_) ? scale : T(0);
    y[i] = x[i] * mask_[i];
  }
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::Backward(const Tensor<T>& dy) {
  if (dy.size() != mask_.size())
    throw ShapeError(this->name_ + ": gradient does not match the last forward");
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, std::size_t features, double momentum,
                        double eps)
    : Layer<T>(std::move(name)),
      features_(features),
      momentum_(momentum),
      eps_(eps),
      gamma_(this->name_ + ".gamma", {features}),
      beta_(this->name_ + ".beta", {features}),
      running_mean_(this->name_ + ".running_mean", {features}, false),
      running_var_(this->name_ + ".running_var", {features}, false) {
  gamma_.value.Fill(T(1));
  running_var_.value.Fill(T(1));
}

template <typename T>
Tensor<T> BatchNorm<T>::Infer(const Tensor<T>& x) const {
  if (x.shape().empty() || x.shape().back() != features_)
    throw ShapeError(this->name_ + ": expected " + std::to_string(features_) +
                     " features, got " + ShapeString(x.shape()));
  Tensor<T> y(x.shape());
  const std::size_t rows = x.size() / features_;
  for (std::size_t j = 0; j < features_; ++j) {
    const T inv = T(1) / std::sqrt(running_var_.value[j] + static_cast<T>(eps_));
    const T g = gamma_.value[j] * inv;
    const T shift = beta_.value[j] - g * running_mean_.value[j];
    for (std::size_t r = 0; r < rows; ++r)
      y[r * features_ + j] = g * x[r * features_ + j] + shift;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::Train(const Tensor<T>& x) {
  if (x.shape().empty() || x.shape().back() != features_)
    throw ShapeError(this->name_ + ": expected " + std::to_string(features_) +
                     " features, got " + ShapeString(x.shape()));
  const std::size_t rows = x.size() / features_;
  if (rows < 2)
    throw ShapeError(this->name_ + ": batch normalization in training needs a "
                                   "batch of at least 2");
  normalized_ = Tensor<T>(x.shape());
  inv_std_.assign(features_, T(0));
  Tensor<T> y(x.shape());
  const T m = static_cast<T>(momentum_);
  for (std::size_t j = 0; j < features_; ++j) {
    T mean = 0;
    for (std::size_t r = 0; r < rows; ++r) mean += x[r * features_ + j];
    mean /= static_cast<T>(rows);
    T var = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const T d = x[r * features_ + j] - mean;
      var += d * d;
    }
    var /= static_cast<T>(rows);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps_));
    inv_std_[j] = inv;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * features_ + j;
      normalized_[i] = (x[i] - mean) * inv;
      y[i] = gamma_.value[j] * normalized_[i] + beta_.value[j];
    }
    running_mean_.value[j] = m * running_mean_.value[j] + (T(1) - m) * mean;
    running_var_.value[j] = m * running_var_.value[j] + (T(1) - m) * var;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, normalized_.shape(), dy.shape());
  const std::size_t rows = dy.size() / features_;
  const T n = static_cast<T>(rows);
  Tensor<T> dx(dy.shape());
  for (std::size_t j = 0; j < features_; ++j) {
    T sum_dy = 0, sum_dy_xhat = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * features_ + j;
      sum_dy += dy[i];
      sum_dy_xhat += dy[i] * normalized_[i];
    }
    gamma_.grad[j] += sum_dy_xhat;
    beta_.grad[j] += sum_dy;
    const T g = gamma_.value[j] * inv_std_[j] / n;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * features_ + j;
      dx[i] = g * (n * dy[i] - sum_dy - normalized_[i] * sum_dy_xhat);
    }
  }
  gamma_.has_grad = beta_.has_grad = true;
  return dx;
}

// ---------------------------------------------------------------- LayerNorm

template <typename T>
LayerNorm<T>::LayerNorm(std::string name, std::size_t channels, double eps)
    : Layer<T>(std::move(name)),
      channels_(channels),
      eps_(eps),
      gamma_(this->name_ + ".gamma", {channels}),
      beta_(this->name_ + ".beta", {channels}) {
  gamma_.value.Fill(T(1));
}

template <typename T>
Tensor<T> LayerNorm<T>::Normalize(const Tensor<T>& x, Tensor<T>* normalized,
                                  std::vector<T>* inv_std) const {
  if (x.rank() < 2 || x.shape().back() != channels_)
    throw ShapeError(this->name_ + ": expected " + std::to_string(channels_) +
                     " channels, got " + ShapeString(x.shape()));
  const std::size_t B = x.dim(0), D = x.size() / B;
  Tensor<T> y(x.shape());
  if (normalized) {
    *normalized = Tensor<T>(x.shape());
    inv_std->assign(B, T(0));
  }
  for (std::size_t b = 0; b < B; ++b) {
    const T* xb = x.data() + b * D;
    T mean = 0;
    for (std::size_t i = 0; i < D; ++i) mean += xb[i];
    mean /= static_cast<T>(D);
    T var = 0;
    for (std::size_t i = 0; i < D; ++i) var += (xb[i] - mean) * (xb[i] - mean);
    var /= static_cast<T>(D);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps_));
    if (inv_std) (*inv_std)[b] = inv;
    for (std::size_t i = 0; i < D; ++i) {
      const T xhat = (xb[i] - mean) * inv;
      if (normalized) (*normalized)[b * D + i] = xhat;
      const std::size_t c = i % channels_;
      y[b * D + i] = gamma_.value[c] * xhat + beta_.value[c];
    }
  }
  return y;
}

template <typename T>
Tensor<T> LayerNorm<T>::Infer(const Tensor<T>& x) const {
  return Normalize(x, nullptr, nullptr);
}

template <typename T>
Tensor<T> LayerNorm<T>::Train(const Tensor<T>& x) {
  return Normalize(x, &normalized_, &inv_std_);
}

template <typename T>
Tensor<T> LayerNorm<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, normalized_.shape(), dy.shape());
  const std::size_t B = dy.dim(0), D = dy.size() / B;
  const T n = static_cast<T>(D);
  Tensor<T> dx(dy.shape());
  AlignedVector<T> dxhat(D);
  for (std::size_t b = 0; b < B; ++b) {
    T sum = 0, sum_xhat = 0;
    for (std::size_t i = 0; i < D; ++i) {
      const std::size_t k = b * D + i;
      const std::size_t c = i % channels_;
      gamma_.grad[c] += dy[k] * normalized_[k];
      beta_.grad[c] += dy[k];
      dxhat[i] = dy[k] * gamma_.value[c];
      sum += dxhat[i];
      sum_xhat += dxhat[i] * normalized_[k];
    }
    const T g = inv_std_[b] / n;
    for (std::size_t i = 0; i < D; ++i) {
      const std::size_t k = b * D + i;
      dx[k] = g * (n * dxhat[i] - sum - normalized_[k] * sum_xhat);
    }
  }
  gamma_.has_grad = beta_.has_grad = true;
  return dx;
}

// ---------------------------------------------------------------- Conv1d

template <typename T>
Conv1d<T>::Conv1d(std::string name, std::size_t in_channels,
                  std::size_t out_channels, std::size_t kernel)
    : Layer<T>(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      weight_(this->name_ + ".weight", {kernel, in_channels, out_channels}),
      bias_(this->name_ + ".bias", {out_channels}) {}

template <typename T>
Shape Conv1d<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 3);
  if (input[2] != in_)
    throw ShapeError(this->name_ + ": expected " + std::to_string(in_) +
                     " input channels, got " + ShapeString(input));
  if (input[1] < k_)
    throw ShapeError(this->name_ + ": input length " + std::to_string(input[1]) +
                     " is shorter than the kernel " + std::to_string(k_));
  return {input[0], input[1] - k_ + 1, out_};
}

template <typename T>
Tensor<T> Conv1d<T>::Infer(const Tensor<T>& x) const {
  const Shape out_shape = OutputShape(x.shape());
  const std::size_t B = x.dim(0), L = x.dim(1), Lo = out_shape[1];
  Tensor<T> y(out_shape);
  ConstMatMap<T> w(weight_.value.data(), k_ * in_, out_);
  const auto bias = ConstVecMap<T>(bias_.value.data(), out_).transpose();
  for (std::size_t b = 0; b < B; ++b) {
    WindowMap<T> cols(x.data() + b * L * in_, Lo, k_ * in_, Eigen::OuterStride<>(in_));
    MatMap<T> yb(y.data() + b * Lo * out_, Lo, out_);
    yb.noalias() = cols * w;
    yb.rowwise() += bias;
  }
  return y;
}

template <typename T>
Tensor<T> Conv1d<T>::Train(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> Conv1d<T>::Backward(const Tensor<T>& dy) {
  const Shape& in_shape = input_.shape();
  ExpectSameShape(this->name_, OutputShape(in_shape), dy.shape());
  const std::size_t B = in_shape[0], L = in_shape[1], Lo = dy.dim(1);
  const std::size_t K = k_ * in_;
  MatMap<T> dw(weight_.grad.data(), K, out_);
  VecMap<T> db(bias_.grad.data(), out_);
  ConstMatMap<T> w(weight_.value.data(), K, out_);
  Tensor<T> dx;
  if (this->input_grad_) dx = Tensor<T>(in_shape);
  RowMatrix<T> dcols;
  for (std::size_t b = 0; b < B; ++b) {
    WindowMap<T> cols(input_.data() + b * L * in_, Lo, K, Eigen::OuterStride<>(in_));
    ConstMatMap<T> dyb(dy.data() + b * Lo * out_, Lo, out_);
    dw.noalias() += cols.transpose() * dyb;
    db += dyb.colwise().sum().transpose();
    if (this->input_grad_) {
      dcols.noalias() = dyb * w.transpose();
      T* dxb = dx.data() + b * L * in_;
      for (std::size_t t = 0; t < Lo; ++t) {
        const T* src = dcols.data() + t * K;
        T* dst = dxb + t * in_;
        for (std::size_t j = 0; j < K; ++j) dst[j] += src[j];
      }
    }
  }
  weight_.has_grad = bias_.has_grad = true;
  return dx;
}

// ---------------------------------------------------------------- MaxPool1d

template <typename T>
MaxPool1d<T>::MaxPool1d(std::string name, std::size_t pool)
    : Layer<T>(std::move(name)), pool_(pool) {
  if (pool_ == 0) throw ShapeError(this->name_ + ": zero pool size");
}

template <typename T>
Shape MaxPool1d<T>::OutputShape(const Shape& input) const {
  ExpectRank(this->name_, input, 3);
  if (input[1] < pool_)
    throw ShapeError(this->name_ + ": input length " + std::to_string(input[1]) +
                     " is shorter than the pool " + std::to_string(pool_));
  return {input[0], input[1] / pool_, input[2]};
}

template <typename T>
Tensor<T> MaxPool1d<T>::Pool(const Tensor<T>& x,
                             std::vector<std::size_t>* argmax) const {
  const Shape out_shape = OutputShape(x.shape());
  const std::size_t B = x.dim(0), L = x.dim(1), C = x.dim(2), Lo = out_shape[1];
  Tensor<T> y(out_shape);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < Lo; ++t)
      for (std::size_t c = 0; c < C; ++c, ++o) {
        std::size_t best = (b * L + t * pool_) * C + c;
        for (std::size_t j = 1; j < pool_; ++j) {
          const std::size_t idx = (b * L + t * pool_ + j) * C + c;
          if (x[idx] > x[best]) best = idx;
        }
        y[o] = x[best];
        if (argmax) (*argmax)[o] = best;
      }
  return y;
}

template <typename T>
Tensor<T> MaxPool1d<T>::Infer(const Tensor<T>& x) const {
  return Pool(x, nullptr);
}

template <typename T>
Tensor<T> MaxPool1d<T>::Train(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return Pool(x, &argmax_);
}

template <typename T>
Tensor<T> MaxPool1d<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, OutputShape(input_shape_), dy.shape());
  Tensor<T> dx(input_shape_);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax_[o]] += dy[o];
  return dx;
}

// ---------------------------------------------------------------- SincConv1d

template <typename T>
SincConv1d<T>::SincConv1d(std::string name, std::size_t filters,
                          std::size_t length)
    : Layer<T>(std::move(name)),
      filters_(filters),
      length_(length),
      cutoffs_(this->name_ + ".cutoffs", {filters, 2}) {
  if (length_ % 2 == 0) throw ShapeError(this->name_ + ": filter length must be odd");
  const double denom = static_cast<double>(length_ - 1);
  window_.resize(length_);
  for (std::size_t n = 0; n < length_; ++n)
    window_[n] = static_cast<T>(
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom));
}

namespace {

constexpr double kNyquist = 0.5;
constexpr double kMinCutoff = 1e-6;

struct BandJacobian {
  double low, high;
  double dlow_dp1;
  double dhigh_dp1, dhigh_dp2;
};

BandJacobian RealizeBand(double p1, double p2) {
  BandJacobian j{};
  const double s1 = p1 > 0 ? 1.0 : (p1 < 0 ? -1.0 : 0.0);
  const double d = p2 - p1;
  const double sd = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
  const double a = std::abs(p1);
  if (a < kMinCutoff) {
    j.low = kMinCutoff;
  } else if (a > kNyquist) {
    j.low = kNyquist;
  } else {
    j.low = a;
    j.dlow_dp1 = s1;
  }
  const double h = j.low + std::abs(d);
  if (h > kNyquist) {
    j.high = kNyquist;
  } else {
    j.high = h;
    j.dhigh_dp1 = j.dlow_dp1 - sd;
    j.dhigh_dp2 = sd;
  }
  return j;
}

}  // namespace

template <typename T>
SincBand SincConv1d<T>::Band(std::size_t filter) const {
  const auto j = RealizeBand(cutoffs_.value[2 * filter], cutoffs_.value[2 * filter + 1]);
  return {j.low, j.high};
}

template <typename T>
AlignedVector<T> SincConv1d<T>::Taps() const {
  AlignedVector<T> taps(length_ * filters_);
  const auto half = static_cast<std::ptrdiff_t>(length_ / 2);
  for (std::size_t k = 0; k < filters_; ++k) {
    const SincBand band = Band(k);
    for (std::size_t i = 0; i < length_; ++i) {
      const auto n = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
      double g;
      if (n == 0.0) {
        g = 2.0 * (band.high - band.low);
      } else {
        g = (std::sin(2.0 * std::numbers::pi * band.high * n) -
             std::sin(2.0 * std::numbers::pi * band.low * n)) /
            (std::numbers::pi * n);
      }
      taps[i * filters_ + k] = static_cast<T>(g) * window_[i];
    }
  }
  return taps;
}

template <typename T>
Shape SincConv1d<T>::OutputShape(const Shape& input) const {
  if (input.size() != 2 && !(input.size() == 3 && input[2] == 1))
    throw ShapeError(this->name_ + ": expected [B, N] or [B, N, 1], got " +
                     ShapeString(input));
  if (input[1] < length_)
    throw ShapeError(this->name_ + ": input of " + std::to_string(input[1]) +
                     " samples is shorter than the filter length " +
                     std::to_string(length_));
  return {input[0], input[1] - length_ + 1, filters_};
}

template <typename T>
Tensor<T> SincConv1d<T>::Infer(const Tensor<T>& x) const {
  const Shape out_shape = OutputShape(x.shape());
  const std::size_t B = x.dim(0), N = x.dim(1), Lo = out_shape[1];
  const AlignedVector<T> taps = Taps();
  ConstMatMap<T> g(taps.data(), length_, filters_);
  Tensor<T> y(out_shape);
  for (std::size_t b = 0; b < B; ++b) {
    WindowMap<T> cols(x.data() + b * N, Lo, length_, Eigen::OuterStride<>(1));
    MatMap<T>(y.data() + b * Lo * filters_, Lo, filters_).noalias() = cols * g;
  }
  return y;
}

template <typename T>
Tensor<T> SincConv1d<T>::Train(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> SincConv1d<T>::Backward(const Tensor<T>& dy) {
  const Shape& in_shape = input_.shape();
  ExpectSameShape(this->name_, OutputShape(in_shape), dy.shape());
  const std::size_t B = in_shape[0], N = in_shape[1], Lo = dy.dim(1);
  RowMatrix<T> dtaps = RowMatrix<T>::Zero(length_, filters_);
  Tensor<T> dx;
  AlignedVector<T> taps;
  if (this->input_grad_) {
    dx = Tensor<T>(in_shape);
    taps = Taps();
  }
  RowMatrix<T> dcols;
  for (std::size_t b = 0; b < B; ++b) {
    WindowMap<T> cols(input_.data() + b * N, Lo, length_, Eigen::OuterStride<>(1));
    ConstMatMap<T> dyb(dy.data() + b * Lo * filters_, Lo, filters_);
    dtaps.noalias() += cols.transpose() * dyb;
    if (this->input_grad_) {
      dcols.noalias() = dyb * ConstMatMap<T>(taps.data(), length_, filters_).transpose();
      T* dxb = dx.data() + b * N;
      for (std::size_t t = 0; t < Lo; ++t)
        for (std::size_t j = 0; j < length_; ++j) dxb[t + j] += dcols(t, j);
    }
  }
  // Chain rule through the taps to the band edges, then to the raw values.
  const auto half = static_cast<std::ptrdiff_t>(length_ / 2);
  for (std::size_t k = 0; k < filters_; ++k) {
    const auto jac = RealizeBand(cutoffs_.value[2 * k], cutoffs_.value[2 * k + 1]);
    double d_low = 0.0, d_high = 0.0;
    for (std::size_t i = 0; i < length_; ++i) {
      const auto n = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
      const double gw = static_cast<double>(dtaps(i, k)) * window_[i];
      d_high += gw * 2.0 * std::cos(2.0 * std::numbers::pi * jac.high * n);
      d_low -= gw * 2.0 * std::cos(2.0 * std::numbers::pi * jac.low * n);
    }
    cutoffs_.grad[2 * k] +=
        static_cast<T>(d_low * jac.dlow_dp1 + d_high * jac.dhigh_dp1);
    cutoffs_.grad[2 * k + 1] += static_cast<T>(d_high * jac.dhigh_dp2);
  }
  cutoffs_.has_grad = true;
  return dx;
}

// ---------------------------------------------------------------- softmax

template <typename T>
Tensor<T> LogSoftmaxRows(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("log-softmax expects [B, K]");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t b = 0; b < B; ++b) {
    const T* row = logits.data() + b * K;
    const T m = *std::max_element(row, row + K);
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(row[k] - m);
    const T lse = m + std::log(sum);
    for (std::size_t k = 0; k < K; ++k) out[b * K + k] = row[k] - lse;
  }
  return out;
}

template <typename T>
Tensor<T> LogSoftmax<T>::Infer(const Tensor<T>& x) const {
  return LogSoftmaxRows(x);
}

template <typename T>
Tensor<T> LogSoftmax<T>::Train(const Tensor<T>& x) {
  output_ = LogSoftmaxRows(x);
  return output_;
}

template <typename T>
Tensor<T> LogSoftmax<T>::Backward(const Tensor<T>& dy) {
  ExpectSameShape(this->name_, output_.shape(), dy.shape());
  const std::size_t B = dy.dim(0), K = dy.dim(1);
  Tensor<T> dx(dy.shape());
  for (std::size_t b = 0; b < B; ++b) {
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += dy[b * K + k];
    for (std::size_t k = 0; k < K; ++k)
      dx[b * K + k] = dy[b * K + k] - std::exp(output_[b * K + k]) * sum;
  }
  return dx;
}

template <typename T>
T SoftmaxCrossEntropy(const Tensor<T>& logits, std::span<const int> labels,
                      Tensor<T>* grad) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw ShapeError("softmax cross-entropy: logits " + ShapeString(logits.shape()) +
                     " do not match " + std::to_string(labels.size()) + " labels");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  const Tensor<T> logp = LogSoftmaxRows(logits);
  if (grad) *grad = Tensor<T>(logits.shape());
  T loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= K)
      throw ShapeError("label " + std::to_string(label) + " out of range");
    loss -= logp[b * K + static_cast<std::size_t>(label)];
    if (grad) {
      for (std::size_t k = 0; k < K; ++k)
        (*grad)[b * K + k] = std::exp(logp[b * K + k]) / static_cast<T>(B);
      (*grad)[b * K + static_cast<std::size_t>(label)] -= T(1) / static_cast<T>(B);
    }
  }
  return loss / static_cast<T>(B);
}

template <typename T>
void InitHeNormal(Parameter<T>& weight, std::size_t fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& v : weight.value.values()) v = static_cast<T>(dist(rng));
}

#define ANTISPOOF_INSTANTIATE(T)                                              \
  template class Conv2d<T>;                                                   \
  template class MaxPool2d<T>;                                                \
  template class TimeTrim<T>;                                                 \
  template class Mfm<T>;                                                      \
  template class TemporalMeanPool<T>;                                         \
  template class Flatten<T>;                                                  \
  template class Dense<T>;                                                    \
  template class LeakyRelu<T>;                                                \
  template class Abs<T>;                                                      \
  template class Dropout<T>;                                                  \
  template class BatchNorm<T>;                                                \
  template class LayerNorm<T>;                                                \
  template class Conv1d<T>;                                                   \
  template class MaxPool1d<T>;                                                \
  template class SincConv1d<T>;                                               \
  template class LogSoftmax<T>;                                               \
  template Tensor<T> LogSoftmaxRows<T>(const Tensor<T>&);                     \
  template T SoftmaxCrossEntropy<T>(const Tensor<T>&, std::span<const int>,  \
                                    Tensor<T>*);                              \
  template void InitHeNormal<T>(Parameter<T>&, std::size_t, Rng&);

ANTISPOOF_INSTANTIATE(float)
ANTISPOOF_INSTANTIATE(double)

#undef ANTISPOOF_INSTANTIATE

}  // namespace antispoof::nnet
