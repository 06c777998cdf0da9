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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "antispoof/nnet/layers.h"

namespace antispoof::nnet {

// A straight chain of layers. All three architectures are sequential, so
// this is the only container the toolkit needs.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  template <typename L, typename... Args>
  L& Add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    if (layers_.empty()) ref.set_input_grad(false);
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  Tensor<T> Forward(const Tensor<T>& x, Mode mode) {
    return ForwardRange(x, mode, 0, layers_.size());
  }
  Tensor<T> Infer(const Tensor<T>& x) const {
    return InferRange(x, 0, layers_.size());
  }
  // Layers [begin, end).
  Tensor<T> ForwardRange(Tensor<T> x, Mode mode, std::size_t begin,
                         std::size_t end);
  Tensor<T> InferRange(Tensor<T> x, std::size_t begin, std::size_t end) const;

  // Backpropagates through every layer, last to first.
  void Backward(const Tensor<T>& dy);

  std::vector<Parameter<T>*> Params();
  std::vector<Parameter<T>*> TrainableParams();
  std::vector<const Parameter<T>*> Params() const;

  // Output shape after each layer for a given input shape.
  std::vector<std::pair<std::string, Shape>> ShapeTrace(const Shape& input) const;

  void ZeroGrad();

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Element count of all trainable tensors.
template <typename T>
std::size_t CountTrainable(const std::vector<Parameter<T>*>& params);

// Checkpoint, little-endian: "ANNM", u32 version, then per tensor: u32 name
// length, name bytes, u32 rank, u32 dims, float32 payload. Covers trainable
// and non-trainable tensors.
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
std::string EncodeCheckpoint(const std::vector<const Parameter<T>*>& params);
// Loads every named tensor into the matching parameter. Throws FormatError on
// a bad header, missing names or shape mismatches.
template <typename T>
void DecodeCheckpoint(std::string_view bytes,
                      const std::vector<Parameter<T>*>& params);

template <typename T>
void SaveCheckpoint(const Network<T>& net, const std::filesystem::path& path);
template <typename T>
void LoadCheckpoint(Network<T>& net, const std::filesystem::path& path);

}  // namespace antispoof::nnet
