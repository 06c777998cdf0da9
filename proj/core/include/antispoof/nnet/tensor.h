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

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "antispoof/common.h"

namespace antispoof::nnet {

using Shape = std::vector<std::size_t>;

// Tensor buffers start on a cache-line boundary. Vectorized reductions peel
// a different number of leading scalars depending on the buffer address, so
// a fixed alignment is what keeps results bitwise reproducible from one run
// to the next.
inline constexpr std::size_t kTensorAlignment = 64;

template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kTensorAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t{kTensorAlignment});
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major array. Activations and gradients flowing between layers
// are plain tensors; trainable state lives in Parameter below.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), values_(NumElements(shape_), fill) {}
  Tensor(Shape shape, const std::vector<T>& values)
      : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    if (values_.size() != NumElements(shape_))
      throw ShapeError("tensor payload of " + std::to_string(values_.size()) +
                       " elements does not fit shape " + ShapeString(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T& operator[](std::size_t i) { return values_[i]; }
  T operator[](std::size_t i) const { return values_[i]; }

  void Fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  // Same payload, new shape with equal element count.
  void Reshape(Shape shape) {
    if (NumElements(shape) != values_.size())
      throw ShapeError("cannot reshape " + ShapeString(shape_) + " to " +
                       ShapeString(shape));
    shape_ = std::move(shape);
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  AlignedVector<T> values_;
};

// A named tensor owned by a layer, with its gradient buffer. Non-trainable
// parameters (batch-norm running statistics) are saved in checkpoints but
// never touched by an optimizer.
template <typename T>
struct Parameter {
  Parameter(std::string name_in, Shape shape, bool trainable_in = true)
      : name(std::move(name_in)),
        value(shape),
        grad(shape),
        trainable(trainable_in) {}

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
  // Set by a backward pass, cleared by the optimizer step.
  bool has_grad = false;

  void ZeroGrad() {
    grad.Fill(T(0));
    has_grad = false;
  }
};

}  // namespace antispoof::nnet
