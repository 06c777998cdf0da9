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

// Property checks on minibatch construction and chunk sampling, shared by
// the unit and acceptance suites. Each returns a list of violations.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "antispoof/pipeline.h"

namespace testing_support {

inline std::vector<std::string> MinibatchViolations(
    std::span<const antispoof::pipeline::Example> examples,
    const std::vector<antispoof::pipeline::Minibatch>& batches, std::size_t batch_size) {
  std::vector<std::string> v;
  std::set<std::string> speakers;
  for (const auto& e : examples) speakers.insert(e.speaker_id);
  std::vector<std::size_t> seen;
  std::size_t multi = 0;
  for (const auto& b : batches) {
    std::set<std::string> actual;
    for (std::size_t i : b.indices) {
      seen.push_back(i);
      actual.insert(examples[i].speaker_id);
    }
    if (actual != b.speakers) v.push_back("batch speaker set is wrong");
    if (b.indices.size() > batch_size) v.push_back("oversized batch");
    if (b.indices.empty()) v.push_back("empty batch");
    if (actual.size() > 1) ++multi;
    if (!b.overflow && actual.size() != 1) v.push_back("regular batch mixes speakers");
    if (!b.overflow && b.indices.size() != batch_size) v.push_back("short regular batch");
  }
  if (multi > speakers.size())
    v.push_back(std::to_string(multi) + " multi-speaker batches for " +
                std::to_string(speakers.size()) + " speakers");
  std::sort(seen.begin(), seen.end());
  std::vector<std::size_t> all(examples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (seen != all) v.push_back("example multiset not preserved");
  return v;
}

inline std::vector<std::string> ChunkBatchViolations(const antispoof::pipeline::ChunkBatch& batch,
                                                     const antispoof::ProtocolSet& protocol,
                                                     std::size_t pairs, std::size_t chunk) {
  std::vector<std::string> v;
  if (batch.chunks.shape() != antispoof::nnet::Shape{2 * pairs, chunk})
    v.push_back("chunk tensor shape " + antispoof::nnet::ShapeString(batch.chunks.shape()));
  if (batch.labels.size() != 2 * pairs) v.push_back("label count");
  const auto bonafide = std::count(batch.labels.begin(), batch.labels.end(), 0);
  const auto spoof = std::count(batch.labels.begin(), batch.labels.end(), 1);
  if (bonafide != static_cast<long>(pairs) || spoof != static_cast<long>(pairs))
    v.push_back("class counts " + std::to_string(bonafide) + "/" + std::to_string(spoof));
  for (std::size_t p = 0; p < pairs && 2 * p + 1 < batch.labels.size(); ++p) {
    if (batch.labels[2 * p] != 0 || batch.labels[2 * p + 1] != 1) v.push_back("pair order");
    if (batch.speakers[2 * p] != batch.speakers[2 * p + 1]) v.push_back("pair speaker mismatch");
    for (std::size_t k : {2 * p, 2 * p + 1}) {
      const auto* r = protocol.Find(batch.utt_ids[k]);
      if (!r || r->speaker_id != batch.speakers[k] ||
          antispoof::pipeline::Label(r->key) != batch.labels[k])
        v.push_back("row label does not match the protocol");
    }
  }
  return v;
}

}  // namespace testing_support
