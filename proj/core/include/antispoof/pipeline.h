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

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "antispoof/common.h"
#include "antispoof/dataio.h"
#include "antispoof/dsp.h"
#include "antispoof/models.h"
#include "antispoof/nnet/optim.h"

namespace antispoof::pipeline {

constexpr std::size_t kSegmentFrames = 100;
constexpr std::size_t kCnnBatchSize = 128;

// Training examples are cut from the concatenation of all utterances that
// share a speaker and a condition (bonafide, or one attack id).
struct GroupKey {
  std::string speaker_id;
  Key key = Key::kBonafide;
  std::optional<std::string> attack_id;

  auto operator<=>(const GroupKey&) const = default;
};

using FeatureGroups = std::map<GroupKey, std::vector<FeatureMap>>;

struct Example {
  FeatureMap features;  // bins x segment_frames x channels
  std::string speaker_id;
  Key label = Key::kBonafide;
  std::optional<std::string> attack_id;
};

// Groups protocol records by (speaker, condition), looking up each
// utterance's features through `features_of`.
FeatureGroups GroupFeatures(
    const ProtocolSet& protocol,
    const std::function<FeatureMap(const TrialRecord&)>& features_of);

// Concatenates each group along time and splits it into consecutive
// segments of exactly `segment_frames`, dropping the partial tail.
std::vector<Example> MakeExamples(const FeatureGroups& groups,
                                  std::size_t segment_frames = kSegmentFrames);

struct Minibatch {
  std::vector<std::size_t> indices;  // into the example list
  std::set<std::string> speakers;
  bool overflow = false;
};

// Per speaker: shuffle, emit floor(n / batch_size) single-speaker batches.
// Remainders of all speakers are pooled, shuffled and packed into overflow
// batches; the last one may be short. Every example appears exactly once.
std::vector<Minibatch> MakeMinibatches(std::span<const Example> examples,
                                       std::size_t batch_size, Rng& rng);

struct SpeakerSplit {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::string warning;
};

// Holds out one randomly chosen speaker for validation.
SpeakerSplit SplitTrainValid(const ProtocolSet& protocol, Rng& rng);

// Records whose speaker is in `speakers`.
ProtocolSet FilterSpeakers(const ProtocolSet& protocol,
                           const std::vector<std::string>& speakers);
// Bonafide records plus spoof records of the given attacks.
ProtocolSet FilterAttacks(const ProtocolSet& protocol,
                          const std::set<std::string>& attacks);

struct CrossvalSplit {
  std::vector<std::string> train_attacks;
  std::vector<std::string> heldout_attacks;
};

// Every way of holding out `k_hold` attacks, in lexicographic order of the
// held-out set.
std::vector<CrossvalSplit> AttackCrossvalSplits(const ProtocolSet& protocol,
                                                std::size_t k_hold);

struct ChunkConfig {
  std::size_t chunk_samples = 3200;
  std::size_t pairs = 128;
  std::size_t max_retries = 100;
};

struct ChunkBatch {
  // [2 * pairs, chunk_samples]; rows 2i (bonafide) and 2i+1 (spoof) are a
  // same-speaker pair.
  nnet::Tensor<float> chunks;
  std::vector<int> labels;
  std::vector<std::string> speakers;
  std::vector<std::string> utt_ids;
};

// Draws balanced SincNet minibatches from preprocessed waveforms.
class ChunkSampler {
 public:
  // Throws InputError naming any speaker without both bonafide and spoof
  // utterances, or any utterance missing from the store.
  ChunkSampler(const ProtocolSet& protocol, const WaveformStore& store,
               ChunkConfig config = {});
  ChunkSampler(const ChunkSampler&) = delete;
  ChunkSampler& operator=(const ChunkSampler&) = delete;

  ChunkBatch Sample(Rng& rng) const;
  const ChunkConfig& config() const { return config_; }

 private:
  // Index into records_ of a uniformly drawn utterance from `pool` that is
  // long enough for one chunk.
  std::size_t Draw(const std::vector<std::size_t>& pool, Rng& rng) const;
  const WaveformStore& store_;
  ChunkConfig config_;
  std::vector<TrialRecord> records_;
  std::vector<std::size_t> bonafide_;
  std::map<std::string, std::vector<std::size_t>> spoof_by_speaker_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double learning_rate = 0.0;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;

  // "epoch,train_loss,valid_loss,lr" header plus one row per epoch.
  std::string ToCsv() const;
};

// Non-finite training loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct CnnTrainConfig {
  nnet::OptimizerConfig optimizer{nnet::OptimizerKind::kAdam, 1e-4};
  std::size_t batch_size = kCnnBatchSize;
  std::size_t max_epochs = 100;
  // Stop after this many epochs without a lower validation loss and restore
  // the best parameters. 0 disables early stopping.
  std::size_t patience = 5;
};

// Minibatches are rebuilt with a fresh shuffle every epoch.
History TrainCnn(models::Model<float>& model, std::span<const Example> train,
                 std::span<const Example> valid, const CnnTrainConfig& config,
                 Rng& rng, const EpochCallback& on_epoch = {});

struct SincNetTrainConfig {
  nnet::OptimizerConfig optimizer{nnet::OptimizerKind::kRmsprop, 1e-5};
  // One learning rate per epoch; the epoch count is the list length.
  std::vector<double> epoch_learning_rates{1e-5, 1e-4, 1e-3, 1e-4, 1e-4};
  std::size_t batches_per_epoch = 1000;
  std::size_t valid_batches = 4;
};

History TrainSincNet(models::Model<float>& model, const ChunkSampler& train,
                     const ChunkSampler* valid,
                     const SincNetTrainConfig& config, Rng& rng,
                     const EpochCallback& on_epoch = {});

// Stacks examples into [B, bins, frames, channels].
nnet::Tensor<float> ExampleBatch(std::span<const Example> examples,
                                 std::span<const std::size_t> indices);
// One feature map as [1, bins, frames, channels].
nnet::Tensor<float> FeatureTensor(const FeatureMap& features);

int Label(Key key);

}  // namespace antispoof::pipeline
