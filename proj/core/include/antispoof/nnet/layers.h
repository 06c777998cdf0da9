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

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "antispoof/common.h"
#include "antispoof/nnet/tensor.h"

namespace antispoof::nnet {

enum class Mode { kTrain, kInference };

// One stage of a sequential network. Forward in kTrain mode caches what
// Backward needs; kInference mode goes through Infer, which is const and
// safe to call concurrently on a shared instance.
//
// Image-like tensors are laid out [batch, freq, time, channels]; sequence
// tensors [batch, time, channels].
template <typename T>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual std::string type() const = 0;

  virtual Shape OutputShape(const Shape& input) const = 0;

  Tensor<T> Forward(const Tensor<T>& x, Mode mode) {
    return mode == Mode::kTrain ? Train(x) : Infer(x);
  }
  virtual Tensor<T> Infer(const Tensor<T>& x) const = 0;
  virtual Tensor<T> Train(const Tensor<T>& x) { return Infer(x); }

  // Accumulates parameter gradients and returns d loss / d input. The
  // returned tensor is empty when input gradients are disabled.
  virtual Tensor<T> Backward(const Tensor<T>& dy) = 0;

  virtual std::vector<Parameter<T>*> Params() { return {}; }

  // The first layer of a network has no use for d loss / d input.
  void set_input_grad(bool enabled) { input_grad_ = enabled; }
  bool input_grad() const { return input_grad_; }

 protected:
  std::string name_;
  bool input_grad_ = true;
};

// 2-D cross-correlation, stride 1, "same" zero padding, odd kernel sizes.
// Weight layout [kf, kt, in, out].
template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel_f, std::size_t kernel_t);
  std::string type() const override { return "conv2d"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  std::vector<Parameter<T>*> Params() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t in_, out_, kf_, kt_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// Non-overlapping max pooling over freq and time. Ties go to the first
// element in row-major window order.
template <typename T>
class MaxPool2d : public Layer<T> {
 public:
  MaxPool2d(std::string name, std::size_t pool_f, std::size_t pool_t);
  std::string type() const override { return "maxpool2d"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Tensor<T> Pool(const Tensor<T>& x, std::vector<std::size_t>* argmax) const;
  std::size_t pf_, pt_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

// Drops trailing time frames so the time axis is a multiple of `multiple`.
template <typename T>
class TimeTrim : public Layer<T> {
 public:
  TimeTrim(std::string name, std::size_t multiple);
  std::string type() const override { return "time_trim"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  std::size_t multiple_;
  Shape input_shape_;
};

// Max-Feature-Map: output channel i = max(x[2i], x[2i+1]) over the last axis.
template <typename T>
class Mfm : public Layer<T> {
 public:
  explicit Mfm(std::string name) : Layer<T>(std::move(name)) {}
  std::string type() const override { return "mfm"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Shape input_shape_;
  std::vector<unsigned char> second_wins_;
};

// Mean over the time axis: [B, F, T, C] -> [B, F, C].
template <typename T>
class TemporalMeanPool : public Layer<T> {
 public:
  explicit TemporalMeanPool(std::string name) : Layer<T>(std::move(name)) {}
  std::string type() const override { return "temporal_mean_pool"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Shape input_shape_;
};

// [B, ...] -> [B, prod(...)]
template <typename T>
class Flatten : public Layer<T> {
 public:
  explicit Flatten(std::string name) : Layer<T>(std::move(name)) {}
  std::string type() const override { return "flatten"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Shape input_shape_;
};

// Affine map [B, in] -> [B, out]; weight layout [in, out].
template <typename T>
class Dense : public Layer<T> {
 public:
  Dense(std::string name, std::size_t in, std::size_t out);
  std::string type() const override { return "dense"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  std::vector<Parameter<T>*> Params() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// x if x > 0 else slope * x. slope 0 is a plain ReLU.
template <typename T>
class LeakyRelu : public Layer<T> {
 public:
  LeakyRelu(std::string name, T slope) : Layer<T>(std::move(name)), slope_(slope) {}
  std::string type() const override { return slope_ == T(0) ? "relu" : "leaky_relu"; }
  Shape OutputShape(const Shape& input) const override { return input; }
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  T slope_;
  Tensor<T> input_;
};

template <typename T>
class Abs : public Layer<T> {
 public:
  explicit Abs(std::string name) : Layer<T>(std::move(name)) {}
  std::string type() const override { return "abs"; }
  Shape OutputShape(const Shape& input) const override { return input; }
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Tensor<T> input_;
};

// Inverted dropout: survivors are scaled by 1 / (1 - rate) in training,
// identity in inference.
template <typename T>
class Dropout : public Layer<T> {
 public:
  Dropout(std::string name, double rate, Rng* rng);
  std::string type() const override { return "dropout"; }
  Shape OutputShape(const Shape& input) const override { return input; }
  Tensor<T> Infer(const Tensor<T>& x) const override { return x; }
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

  double rate() const { return rate_; }
  void set_rng(Rng* rng) { rng_ = rng; }

 private:
  double rate_;
  Rng* rng_;
  std::vector<T> mask_;
};

// Normalizes each feature (last axis) over all other axes. Training updates
// the running statistics with `momentum` as the weight of the old value and
// the biased batch variance.
template <typename T>
class BatchNorm : public Layer<T> {
 public:
  BatchNorm(std::string name, std::size_t features, double momentum = 0.9,
            double eps = 1e-5);
  std::string type() const override { return "batch_norm"; }
  Shape OutputShape(const Shape& input) const override { return input; }
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  std::vector<Parameter<T>*> Params() override {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  Parameter<T>& running_mean() { return running_mean_; }
  Parameter<T>& running_var() { return running_var_; }

 private:
  std::size_t features_;
  double momentum_, eps_;
  Parameter<T> gamma_, beta_, running_mean_, running_var_;
  Tensor<T> normalized_;
  std::vector<T> inv_std_;
};

// Normalizes each example over all of its elements, then applies a
// per-channel (last axis) scale and shift.
template <typename T>
class LayerNorm : public Layer<T> {
 public:
  LayerNorm(std::string name, std::size_t channels, double eps = 1e-5);
  std::string type() const override { return "layer_norm"; }
  Shape OutputShape(const Shape& input) const override { return input; }
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  std::vector<Parameter<T>*> Params() override { return {&gamma_, &beta_}; }

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }

 private:
  Tensor<T> Normalize(const Tensor<T>& x, Tensor<T>* normalized,
                      std::vector<T>* inv_std) const;
  std::size_t channels_;
  double eps_;
  Parameter<T> gamma_, beta_;
  Tensor<T> normalized_;
  std::vector<T> inv_std_;
};

// Valid 1-D cross-correlation [B, L, in] -> [B, L - k + 1, out]; weight
// layout [k, in, out].
template <typename T>
class Conv1d : public Layer<T> {
 public:
  Conv1d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel);
  std::string type() const override { return "conv1d"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  std::vector<Parameter<T>*> Params() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t in_, out_, k_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// Non-overlapping max pooling along time of [B, L, C]; a trailing remainder
// shorter than `pool` is dropped.
template <typename T>
class MaxPool1d : public Layer<T> {
 public:
  MaxPool1d(std::string name, std::size_t pool);
  std::string type() const override { return "maxpool1d"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Tensor<T> Pool(const Tensor<T>& x, std::vector<std::size_t>* argmax) const;
  std::size_t pool_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

// Realized band edges of one sinc filter, normalized by the sample rate.
struct SincBand {
  double low;
  double high;
};

// Band-pass filter bank parametrized by two raw values per filter. With raw
// parameters (p1, p2) the realized band is
//   low  = clamp(|p1|),  high = clamp(low + |p2 - p1|)
// clamped to (0, 0.5), so low <= high after any update. Filter taps are
//   g[n] = 2 high sinc(2 pi high n) - 2 low sinc(2 pi low n),
//   n in [-(L-1)/2, (L-1)/2], times a Hamming window.
// Input [B, N] or [B, N, 1], output [B, N - L + 1, filters]. The raw cutoffs
// tensor [filters, 2] is the only trainable parameter.
template <typename T>
class SincConv1d : public Layer<T> {
 public:
  SincConv1d(std::string name, std::size_t filters, std::size_t length);
  std::string type() const override { return "sinc_conv1d"; }
  Shape OutputShape(const Shape& input) const override;
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;
  std::vector<Parameter<T>*> Params() override { return {&cutoffs_}; }

  Parameter<T>& cutoffs() { return cutoffs_; }
  std::size_t filters() const { return filters_; }
  std::size_t length() const { return length_; }

  SincBand Band(std::size_t filter) const;
  // Realized taps, layout [length, filters].
  AlignedVector<T> Taps() const;

 private:
  std::size_t filters_, length_;
  Parameter<T> cutoffs_;
  std::vector<T> window_;
  Tensor<T> input_;
};

// Row-wise log-softmax of [B, K].
template <typename T>
class LogSoftmax : public Layer<T> {
 public:
  explicit LogSoftmax(std::string name) : Layer<T>(std::move(name)) {}
  std::string type() const override { return "log_softmax"; }
  Shape OutputShape(const Shape& input) const override { return input; }
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Train(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& dy) override;

 private:
  Tensor<T> output_;
};

template <typename T>
Tensor<T> LogSoftmaxRows(const Tensor<T>& logits);

// Mean cross-entropy of softmax(logits) against integer labels. Writes
// d loss / d logits into *grad when it is not null.
template <typename T>
T SoftmaxCrossEntropy(const Tensor<T>& logits, std::span<const int> labels,
                      Tensor<T>* grad);

// He-normal initialization of a weight of given fan-in; zero biases.
template <typename T>
void InitHeNormal(Parameter<T>& weight, std::size_t fan_in, Rng& rng);

}  // namespace antispoof::nnet
