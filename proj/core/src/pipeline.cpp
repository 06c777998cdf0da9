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

#include "antispoof/pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace antispoof::pipeline {

using nnet::Tensor;

int Label(Key key) {
  return key == Key::kBonafide ? models::kBonafideLabel : models::kSpoofLabel;
}

FeatureGroups GroupFeatures(
    const ProtocolSet& protocol,
    const std::function<FeatureMap(const TrialRecord&)>& features_of) {
  FeatureGroups groups;
  std::size_t bins = 0, channels = 0;
  for (const auto& record : protocol.records) {
    FeatureMap features = features_of(record);
    if (bins == 0) {
      bins = features.bins();
      channels = features.channels();
    } else if (features.bins() != bins || features.channels() != channels) {
      throw InputError("features of " + record.utt_id + " are " +
                       std::to_string(features.bins()) + " bins x " +
                       std::to_string(features.channels()) +
                       " channels; earlier utterances have " + std::to_string(bins) +
                       " x " + std::to_string(channels));
    }
    groups[GroupKey{record.speaker_id, record.key, record.attack_id}].push_back(
        std::move(features));
  }
  return groups;
}

std::vector<Example> MakeExamples(const FeatureGroups& groups,
                                  std::size_t segment_frames) {
  if (groups.empty()) throw InputError("no feature groups to cut examples from");
  if (segment_frames == 0) throw ConfigError("segment length must be positive");
  std::vector<Example> examples;
  for (const auto& [key, maps] : groups) {
    if (maps.empty()) continue;
    const std::size_t bins = maps.front().bins();
    const std::size_t channels = maps.front().channels();
    std::size_t total = 0;
    for (const auto& m : maps) total += m.frames();
    if (total < segment_frames) continue;
    // Concatenate along time, then cut; segments may straddle utterances.
    FeatureMap joined(bins, total, channels);
    std::size_t offset = 0;
    for (const auto& m : maps) {
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t t = 0; t < m.frames(); ++t)
          for (std::size_t b = 0; b < bins; ++b)
            joined.at(b, offset + t, c) = m.at(b, t, c);
      offset += m.frames();
    }
    for (std::size_t start = 0; start + segment_frames <= total; start += segment_frames)
      examples.push_back(Example{joined.SliceFrames(start, segment_frames),
                                 key.speaker_id, key.key, key.attack_id});
  }
  return examples;
}

std::vector<Minibatch> MakeMinibatches(std::span<const Example> examples,
                                       std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < examples.size(); ++i)
    by_speaker[examples[i].speaker_id].push_back(i);

  std::vector<Minibatch> batches;
  std::vector<std::size_t> leftovers;
  for (auto& [speaker, indices] : by_speaker) {
    std::shuffle(indices.begin(), indices.end(), rng);
    const std::size_t full = indices.size() / batch_size;
    for (std::size_t k = 0; k < full; ++k) {
      Minibatch batch;
      batch.indices.assign(indices.begin() + k * batch_size,
                           indices.begin() + (k + 1) * batch_size);
      batch.speakers.insert(speaker);
      batches.push_back(std::move(batch));
    }
    leftovers.insert(leftovers.end(), indices.begin() + full * batch_size, indices.end());
  }
  std::shuffle(leftovers.begin(), leftovers.end(), rng);
  for (std::size_t start = 0; start < leftovers.size(); start += batch_size) {
    Minibatch batch;
    batch.overflow = true;
    const std::size_t end = std::min(leftovers.size(), start + batch_size);
    batch.indices.assign(leftovers.begin() + start, leftovers.begin() + end);
    for (std::size_t i : batch.indices) batch.speakers.insert(examples[i].speaker_id);
    batches.push_back(std::move(batch));
  }
  // Interleave speakers over the epoch instead of visiting them in order.
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

SpeakerSplit SplitTrainValid(const ProtocolSet& protocol, Rng& rng) {
  const std::vector<std::string> speakers = protocol.Speakers();
  if (speakers.size() < 2)
    throw InputError("a train/validation split needs at least 2 speakers, got " +
                     std::to_string(speakers.size()));
  std::uniform_int_distribution<std::size_t> pick(0, speakers.size() - 1);
  const std::size_t held = pick(rng);
  SpeakerSplit split;
  for (std::size_t i = 0; i < speakers.size(); ++i)
    (i == held ? split.valid : split.train).push_back(speakers[i]);
  if (speakers.size() == 2)
    split.warning = "only 2 speakers: validation holds out half of the speakers";
  return split;
}

ProtocolSet FilterSpeakers(const ProtocolSet& protocol,
                           const std::vector<std::string>& speakers) {
  const std::set<std::string> keep(speakers.begin(), speakers.end());
  ProtocolSet out;
  out.partition = protocol.partition;
  for (const auto& r : protocol.records)
    if (keep.count(r.speaker_id)) out.records.push_back(r);
  return out;
}

ProtocolSet FilterAttacks(const ProtocolSet& protocol,
                          const std::set<std::string>& attacks) {
  ProtocolSet out;
  out.partition = protocol.partition;
  for (const auto& r : protocol.records)
    if (r.key == Key::kBonafide || attacks.count(*r.attack_id)) out.records.push_back(r);
  return out;
}

std::vector<CrossvalSplit> AttackCrossvalSplits(const ProtocolSet& protocol,
                                                std::size_t k_hold) {
  const std::vector<std::string> attacks = protocol.Attacks();
  if (attacks.size() < 2)
    throw InputError("attack cross-validation needs at least 2 attack ids, got " +
                     std::to_string(attacks.size()));
  if (k_hold == 0 || k_hold >= attacks.size())
    throw ConfigError("cannot hold out " + std::to_string(k_hold) + " of " +
                      std::to_string(attacks.size()) +
                      " attacks; at least one must remain for training");
  std::vector<CrossvalSplit> splits;
  // Lexicographic enumeration of k-subsets via a selection mask.
  std::vector<bool> held(attacks.size(), false);
  std::fill(held.begin(), held.begin() + static_cast<std::ptrdiff_t>(k_hold), true);
  do {
    CrossvalSplit split;
    for (std::size_t i = 0; i < attacks.size(); ++i)
      (held[i] ? split.heldout_attacks : split.train_attacks).push_back(attacks[i]);
    splits.push_back(std::move(split));
  } while (std::prev_permutation(held.begin(), held.end()));
  return splits;
}

// ---------------------------------------------------------------- chunks

ChunkSampler::ChunkSampler(const ProtocolSet& protocol, const WaveformStore& store,
                           ChunkConfig config)
    : store_(store), config_(config), records_(protocol.records) {
  if (config_.chunk_samples == 0 || config_.pairs == 0)
    throw ConfigError("chunk length and pair count must be positive");
  std::vector<std::string> missing;
  std::map<std::string, std::size_t> bonafide_count;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!store_.count(r.utt_id)) missing.push_back(r.utt_id);
    if (r.key == Key::kBonafide) {
      bonafide_.push_back(i);
      ++bonafide_count[r.speaker_id];
    } else {
      spoof_by_speaker_[r.speaker_id].push_back(i);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
      list += (i ? ", " : "") + missing[i];
    if (missing.size() > 10) list += ", ...";
    throw InputError(std::to_string(missing.size()) +
                     " utterance(s) have no audio loaded: " + list);
  }
  if (bonafide_.empty()) throw InputError("no bonafide utterances to sample chunks from");
  for (const auto& speaker : protocol.Speakers()) {
    if (!bonafide_count.count(speaker))
      throw InputError("speaker " + speaker + " has no bonafide utterances");
    if (!spoof_by_speaker_.count(speaker))
      throw InputError("speaker " + speaker + " has no spoof utterances");
  }
}

std::size_t ChunkSampler::Draw(const std::vector<std::size_t>& pool, Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const std::size_t i = pool[pick(rng)];
    if (store_.at(records_[i].utt_id).size() >= config_.chunk_samples) return i;
  }
  throw InputError("no utterance of at least " + std::to_string(config_.chunk_samples) +
                   " samples found after " + std::to_string(config_.max_retries) +
                   " retries (speaker " + records_[pool.front()].speaker_id + ")");
}

ChunkBatch ChunkSampler::Sample(Rng& rng) const {
  const std::size_t n = config_.chunk_samples;
  ChunkBatch batch;
  batch.chunks = Tensor<float>({2 * config_.pairs, n});
  batch.labels.reserve(2 * config_.pairs);
  auto put = [&](std::size_t row, std::size_t record) {
    const auto& r = records_[record];
    const Waveform& wave = store_.at(r.utt_id);
    std::uniform_int_distribution<std::size_t> start_dist(0, wave.size() - n);
    const std::size_t start = start_dist(rng);
    float* dst = batch.chunks.data() + row * n;
    for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(wave.samples[start + i]);
    batch.labels.push_back(Label(r.key));
    batch.speakers.push_back(r.speaker_id);
    batch.utt_ids.push_back(r.utt_id);
  };
  for (std::size_t p = 0; p < config_.pairs; ++p) {
    const std::size_t b = Draw(bonafide_, rng);
    put(2 * p, b);
    put(2 * p + 1, Draw(spoof_by_speaker_.at(records_[b].speaker_id), rng));
  }
  return batch;
}

// ---------------------------------------------------------------- training

std::string History::ToCsv() const {
  std::ostringstream ss;
  ss << "epoch,train_loss,valid_loss,lr\n";
  for (const auto& e : epochs)
    ss << e.epoch << ',' << FormatNumber(e.train_loss) << ','
       << FormatNumber(e.valid_loss) << ',' << FormatNumber(e.learning_rate) << '\n';
  return ss.str();
}

Tensor<float> ExampleBatch(std::span<const Example> examples,
                           std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("empty example batch");
  const FeatureMap& first = examples[indices.front()].features;
  const std::size_t F = first.bins(), Tn = first.frames(), C = first.channels();
  Tensor<float> x({indices.size(), F, Tn, C});
  float* out = x.data();
  for (std::size_t i : indices) {
    const FeatureMap& m = examples[i].features;
    if (m.bins() != F || m.frames() != Tn || m.channels() != C)
      throw ShapeError("examples in one batch differ in shape");
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < Tn; ++t)
        for (std::size_t c = 0; c < C; ++c) *out++ = static_cast<float>(m.at(f, t, c));
  }
  return x;
}

Tensor<float> FeatureTensor(const FeatureMap& features) {
  const Example example{features, "", Key::kBonafide, std::nullopt};
  const std::size_t index = 0;
  return ExampleBatch(std::span<const Example>(&example, 1),
                      std::span<const std::size_t>(&index, 1));
}

namespace {

using Snapshot = std::vector<std::vector<float>>;

Snapshot Capture(nnet::Network<float>& net) {
  Snapshot s;
  for (auto* p : net.Params())
    s.emplace_back(p->value.values().begin(), p->value.values().end());
  return s;
}

void Restore(nnet::Network<float>& net, const Snapshot& s) {
  auto params = net.Params();
  for (std::size_t i = 0; i < params.size(); ++i)
    std::copy(s[i].begin(), s[i].end(), params[i]->value.data());
}

void CheckFinite(double loss, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(loss))
    throw DivergenceError("training diverged: non-finite loss at epoch " +
                          std::to_string(epoch) + ", step " + std::to_string(step));
}

// Mean inference loss over all examples, in batches.
double EvaluateLoss(models::Model<float>& model, std::span<const Example> examples,
                    std::size_t batch_size) {
  double total = 0.0;
  std::vector<std::size_t> idx;
  std::vector<int> labels;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    idx.clear();
    labels.clear();
    for (std::size_t i = start; i < end; ++i) {
      idx.push_back(i);
      labels.push_back(Label(examples[i].label));
    }
    const Tensor<float> logits = model.InferLogits(ExampleBatch(examples, idx));
    total += static_cast<double>(nnet::SoftmaxCrossEntropy<float>(logits, labels, nullptr)) *
             static_cast<double>(idx.size());
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace

History TrainCnn(models::Model<float>& model, std::span<const Example> train,
                 std::span<const Example> valid, const CnnTrainConfig& config,
                 Rng& rng, const EpochCallback& on_epoch) {
  if (train.empty()) throw InputError("no training examples");
  auto& net = model.net();
  net.ZeroGrad();
  nnet::Optimizer<float> optimizer(config.optimizer, net.TrainableParams());
  History history;
  double best = std::numeric_limits<double>::infinity();
  Snapshot best_params = Capture(net);
  std::size_t since_best = 0;
  std::vector<int> labels;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = MakeMinibatches(train, config.batch_size, rng);
    double sum = 0.0;
    std::size_t count = 0, step = 0;
    for (const auto& batch : batches) {
      ++step;
      labels.clear();
      for (std::size_t i : batch.indices) labels.push_back(Label(train[i].label));
      const Tensor<float> logits =
          model.ForwardLogits(ExampleBatch(train, batch.indices), nnet::Mode::kTrain);
      Tensor<float> grad;
      const double loss = nnet::SoftmaxCrossEntropy<float>(logits, labels, &grad);
      CheckFinite(loss, epoch, step);
      net.Backward(grad);
      optimizer.Step();
      sum += loss * static_cast<double>(batch.indices.size());
      count += batch.indices.size();
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = sum / static_cast<double>(count);
    record.valid_loss = valid.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : EvaluateLoss(model, valid, config.batch_size);
    record.learning_rate = optimizer.learning_rate();
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
    // Without validation data every epoch counts as the best so far.
    const double monitored = valid.empty() ? -static_cast<double>(epoch) : record.valid_loss;
    if (monitored < best) {
      best = monitored;
      history.best_epoch = epoch;
      best_params = Capture(net);
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  Restore(net, best_params);
  return history;
}

History TrainSincNet(models::Model<float>& model, const ChunkSampler& train,
                     const ChunkSampler* valid, const SincNetTrainConfig& config,
                     Rng& rng, const EpochCallback& on_epoch) {
  if (config.epoch_learning_rates.empty())
    throw ConfigError("SincNet schedule needs at least one epoch learning rate");
  auto& net = model.net();
  net.ZeroGrad();
  nnet::OptimizerConfig opt_config = config.optimizer;
  opt_config.learning_rate = config.epoch_learning_rates.front();
  nnet::Optimizer<float> optimizer(opt_config, net.TrainableParams());
  History history;
  for (std::size_t epoch = 1; epoch <= config.epoch_learning_rates.size(); ++epoch) {
    optimizer.set_learning_rate(config.epoch_learning_rates[epoch - 1]);
    double sum = 0.0;
    for (std::size_t step = 1; step <= config.batches_per_epoch; ++step) {
      const ChunkBatch batch = train.Sample(rng);
      const Tensor<float> logp = model.ForwardLogits(batch.chunks, nnet::Mode::kTrain);
      // The network ends in log-softmax; a second log-softmax is the
      // identity, so the softmax cross-entropy is the NLL of the output.
      Tensor<float> grad;
      const double loss = nnet::SoftmaxCrossEntropy<float>(logp, batch.labels, &grad);
      CheckFinite(loss, epoch, step);
      net.Backward(grad);
      optimizer.Step();
      sum += loss;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = config.batches_per_epoch
                            ? sum / static_cast<double>(config.batches_per_epoch)
                            : std::numeric_limits<double>::quiet_NaN();
    record.valid_loss = std::numeric_limits<double>::quiet_NaN();
    if (valid && config.valid_batches > 0) {
      double vsum = 0.0;
      for (std::size_t k = 0; k < config.valid_batches; ++k) {
        const ChunkBatch batch = valid->Sample(rng);
        const Tensor<float> logp = model.InferLogits(batch.chunks);
        vsum += nnet::SoftmaxCrossEntropy<float>(logp, batch.labels, nullptr);
      }
      record.valid_loss = vsum / static_cast<double>(config.valid_batches);
    }
    record.learning_rate = optimizer.learning_rate();
    history.epochs.push_back(record);
    history.best_epoch = epoch;
    if (on_epoch) on_epoch(record);
  }
  return history;
}

}  // namespace antispoof::pipeline
