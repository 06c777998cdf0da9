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

#include "antispoof/nnet/network.h"

#include <bit>
#include <cstring>
#include <map>
#include <set>

#include "antispoof/dataio.h"

namespace antispoof::nnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <typename T>
Tensor<T> Network<T>::ForwardRange(Tensor<T> x, Mode mode, std::size_t begin,
                                   std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) x = layers_.at(i)->Forward(x, mode);
  return x;
}

template <typename T>
Tensor<T> Network<T>::InferRange(Tensor<T> x, std::size_t begin,
                                 std::size_t end) const {
  for (std::size_t i = begin; i < end; ++i) x = layers_.at(i)->Infer(x);
  return x;
}

template <typename T>
void Network<T>::Backward(const Tensor<T>& dy) {
  Tensor<T> grad = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    grad = layers_[i]->Backward(grad);
    if (grad.empty() && i > 0)
      throw ShapeError("layer " + layers_[i]->name() +
                       " returned no input gradient in the middle of a network");
  }
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::Params() {
  std::vector<Parameter<T>*> out;
  for (auto& layer : layers_)
    for (Parameter<T>* p : layer->Params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Network<T>::Params() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& layer : layers_)
    for (Parameter<T>* p : layer->Params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::TrainableParams() {
  std::vector<Parameter<T>*> out;
  for (Parameter<T>* p : Params())
    if (p->trainable) out.push_back(p);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Shape>> Network<T>::ShapeTrace(
    const Shape& input) const {
  std::vector<std::pair<std::string, Shape>> trace;
  Shape shape = input;
  for (const auto& layer : layers_) {
    shape = layer->OutputShape(shape);
    trace.emplace_back(layer->name(), shape);
  }
  return trace;
}

template <typename T>
void Network<T>::ZeroGrad() {
  for (Parameter<T>* p : Params()) p->ZeroGrad();
}

template <typename T>
std::size_t CountTrainable(const std::vector<Parameter<T>*>& params) {
  std::size_t n = 0;
  for (const Parameter<T>* p : params)
    if (p->trainable) n += p->value.size();
  return n;
}

namespace {

constexpr char kMagic[4] = {'A', 'N', 'N', 'M'};

void PutU32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint32_t U32() {
    std::uint32_t v;
    std::memcpy(&v, Take(4).data(), 4);
    return v;
  }
  std::string_view Take(std::size_t n) {
    if (bytes_.size() - pos_ < n)
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::string EncodeCheckpoint(const std::vector<const Parameter<T>*>& params) {
  std::string out(kMagic, 4);
  PutU32(out, kCheckpointVersion);
  std::set<std::string> seen;
  for (const Parameter<T>* p : params) {
    if (!seen.insert(p->name).second)
      throw Error("duplicate parameter name " + p->name + " in checkpoint");
    PutU32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    PutU32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) PutU32(out, static_cast<std::uint32_t>(d));
    for (T v : p->value.values()) {
      const auto f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

template <typename T>
void DecodeCheckpoint(std::string_view bytes,
                      const std::vector<Parameter<T>*>& params) {
  Reader in(bytes);
  if (bytes.size() < 8 || bytes.substr(0, 4) != std::string_view(kMagic, 4))
    throw FormatError("not a checkpoint: bad magic");
  in.Take(4);
  const std::uint32_t version = in.U32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  std::map<std::string, Parameter<T>*> by_name;
  for (Parameter<T>* p : params) by_name[p->name] = p;
  std::set<std::string> loaded;
  while (!in.done()) {
    const std::uint32_t name_len = in.U32();
    const std::string name(in.Take(name_len));
    const std::uint32_t rank = in.U32();
    Shape shape(rank);
    for (auto& d : shape) d = in.U32();
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw FormatError("checkpoint tensor " + name + " has no matching parameter");
    if (!loaded.insert(name).second)
      throw FormatError("checkpoint tensor " + name + " appears twice");
    Parameter<T>& p = *it->second;
    if (shape != p.value.shape())
      throw FormatError("checkpoint tensor " + name + " has shape " +
                        ShapeString(shape) + ", expected " +
                        ShapeString(p.value.shape()));
    const std::string_view payload = in.Take(4 * p.value.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      float f;
      std::memcpy(&f, payload.data() + 4 * i, 4);
      p.value[i] = static_cast<T>(f);
    }
  }
  for (const auto& [name, p] : by_name)
    if (!loaded.count(name))
      throw FormatError("checkpoint is missing tensor " + name);
}

template <typename T>
void SaveCheckpoint(const Network<T>& net, const std::filesystem::path& path) {
  dataio::WriteFile(path, EncodeCheckpoint<T>(net.Params()));
}

template <typename T>
void LoadCheckpoint(Network<T>& net, const std::filesystem::path& path) {
  DecodeCheckpoint<T>(dataio::ReadFile(path), net.Params());
}

#define ANTISPOOF_INSTANTIATE(T)                                                \
  template class Network<T>;                                                    \
  template std::size_t CountTrainable<T>(const std::vector<Parameter<T>*>&);    \
  template std::string EncodeCheckpoint<T>(const std::vector<const Parameter<T>*>&); \
  template void DecodeCheckpoint<T>(std::string_view,                           \
                                    const std::vector<Parameter<T>*>&);         \
  template void SaveCheckpoint<T>(const Network<T>&, const std::filesystem::path&); \
  template void LoadCheckpoint<T>(Network<T>&, const std::filesystem::path&);

ANTISPOOF_INSTANTIATE(float)
ANTISPOOF_INSTANTIATE(double)

#undef ANTISPOOF_INSTANTIATE

}  // namespace antispoof::nnet
