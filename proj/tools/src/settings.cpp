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

#include "settings.h"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace antispoof::cli {
namespace {

struct KeySpec {
  const char* key;
  const char* value;
  const char* doc;
};

// Every recognised key in file order. The defaults reproduce the reference
// recipe; the toy experiments override sizes from the command line.
constexpr KeySpec kKeys[] = {
    {"run.seed", "1", "seed for every random draw of a command"},
    {"run.deterministic", "false", "single worker thread, reproducible output"},
    {"run.threads", "0", "extraction worker threads; 0 = hardware threads"},

    {"paths.audio_root", "audio", "directory holding <utt_id>.wav files"},
    {"paths.train_protocol", "train.txt", "protocol used by train/crossval"},
    {"paths.eval_protocol", "eval.txt", "protocol scored by score/crossval"},
    {"paths.cache_dir", "cache", "feature cache written by extract"},
    {"paths.output_dir", "run", "checkpoints, histories and reports"},
    {"paths.tdcf_params", "", "t-DCF parameter file; empty = defaults"},

    {"features.kind", "spec+cqt", "spec | cqt | spec+cqt (VGG/LCNN input)"},
    {"features.fft_size", "512", "spectrogram FFT size"},
    {"features.win_length", "400", "spectrogram window, samples"},
    {"features.hop", "160", "spectrogram and CQT hop, samples"},
    {"features.window", "hamming", "hamming | hann | rectangular"},
    {"features.bins", "256", "spectrogram bins kept"},
    {"features.cqt_f_min", "31.25", "lowest CQT centre frequency, Hz"},
    {"features.cqt_bins", "256", "CQT bins"},
    {"features.cqt_bins_per_octave", "32", "CQT bins per octave"},
    {"features.cqt_q_scale", "1", "CQT filter scale"},
    {"features.cqt_frame_offset", "200", "sample at the centre of CQT frame 0"},
    {"features.log_floor", "1e-10", "power floor before the logarithm"},
    {"features.vad_frame", "400", "SincNet VAD frame, samples"},
    {"features.vad_hop", "160", "SincNet VAD hop, samples"},
    {"features.vad_threshold_db", "40", "VAD drop threshold below the peak, dB"},

    {"model.kind", "vgg", "vgg | lcnn | sincnet"},
    {"model.width_multiplier", "1", "scale of channel and dense widths, (0, 1]"},
    {"model.dropout", "standard", "standard | high"},
    {"model.chunk_samples", "3200", "SincNet input chunk, samples"},

    {"train.cnn_optimizer", "adam", "adam | rmsprop"},
    {"train.cnn_learning_rate", "1e-4", "VGG/LCNN learning rate"},
    {"train.batch_size", "128", "VGG/LCNN minibatch size"},
    {"train.max_epochs", "100", "VGG/LCNN epoch limit"},
    {"train.patience", "5", "early-stopping patience; 0 = off"},
    {"train.sinc_optimizer", "rmsprop", "adam | rmsprop"},
    {"train.sinc_learning_rates", "1e-5,1e-4,1e-3,1e-4,1e-4",
     "SincNet learning rate per epoch"},
    {"train.sinc_batches_per_epoch", "1000", "SincNet batches per epoch"},
    {"train.sinc_valid_batches", "4", "SincNet validation batches per epoch"},
    {"train.chunk_pairs", "128", "bonafide/spoof pairs per SincNet batch"},

    {"eval.group_by", "attack_id", "attack_id | env_attack_pair"},
    {"eval.shift_samples", "160", "SincNet scoring frame shift, samples"},

    {"crossval.k_hold", "1", "attacks held out per split"},
};

const KeySpec* FindKey(const std::string& key) {
  for (const auto& spec : kKeys)
    if (key == spec.key) return &spec;
  return nullptr;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double ParseDouble(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t ParseU64(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  if (text.empty() || text[0] == '-')
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || errno == ERANGE)
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

dsp::WindowType ParseWindow(const std::string& text) {
  for (auto w : {dsp::WindowType::kHamming, dsp::WindowType::kHann,
                 dsp::WindowType::kRectangular})
    if (text == dsp::ToString(w)) return w;
  throw ConfigError("features.window: unknown window '" + text +
                    "' (expected hamming, hann or rectangular)");
}

}  // namespace

Settings::Settings() {
  for (const auto& spec : kKeys) values_[spec.key] = spec.value;
}

void Settings::LoadFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.message() +
                      " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ConfigError(path.string() + ": key '" + section +
                        "' is outside any [section]");
    for (const auto& [key, value] : body) Set(section + "." + key, value.data());
  }
}

void Settings::SetAssignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("expected section.key=value, got '" + assignment + "'");
  Set(Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

void Settings::Set(const std::string& key, const std::string& value) {
  if (!FindKey(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = Trim(value);
}

const std::string& Settings::Get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Settings::GetDouble(const std::string& key) const {
  return ParseDouble(key, Get(key));
}

std::size_t Settings::GetSize(const std::string& key) const {
  return static_cast<std::size_t>(ParseU64(key, Get(key)));
}

std::uint64_t Settings::GetU64(const std::string& key) const {
  return ParseU64(key, Get(key));
}

bool Settings::GetBool(const std::string& key) const {
  const std::string& v = Get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> Settings::GetDoubleList(const std::string& key) const {
  std::vector<double> out;
  std::stringstream in(Get(key));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(ParseDouble(key, Trim(item)));
  return out;
}

std::string Settings::ToIni() const {
  std::string out, section;
  for (const auto& spec : kKeys) {
    const std::string key = spec.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += key.substr(dot + 1) + " = " + values_.at(key) + "\n";
  }
  return out;
}

std::string Settings::DocumentedDefaults() {
  std::string out, section;
  for (const auto& spec : kKeys) {
    const std::string key = spec.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += "; " + std::string(spec.doc) + "\n";
    out += key.substr(dot + 1) + " = " + spec.value + "\n";
  }
  return out;
}

const char* ToString(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kSpectrogram: return "spec";
    case FeatureKind::kCqt: return "cqt";
    case FeatureKind::kBoth: return "spec+cqt";
  }
  return "?";
}

FeatureKind ParseFeatureKind(const std::string& text) {
  for (auto k : {FeatureKind::kSpectrogram, FeatureKind::kCqt, FeatureKind::kBoth})
    if (text == ToString(k)) return k;
  throw ConfigError("features.kind: unknown feature kind '" + text +
                    "' (expected spec, cqt or spec+cqt)");
}

RunConfig RunConfig::From(const Settings& s) {
  RunConfig c;
  c.seed = s.GetU64("run.seed");
  c.deterministic = s.GetBool("run.deterministic");
  c.threads = s.GetSize("run.threads");

  c.audio_root = s.Get("paths.audio_root");
  c.train_protocol = s.Get("paths.train_protocol");
  c.eval_protocol = s.Get("paths.eval_protocol");
  c.cache_dir = s.Get("paths.cache_dir");
  c.output_dir = s.Get("paths.output_dir");
  c.tdcf_params = s.Get("paths.tdcf_params");

  c.features = ParseFeatureKind(s.Get("features.kind"));
  c.spectrogram.fft_size = s.GetSize("features.fft_size");
  c.spectrogram.win_length = s.GetSize("features.win_length");
  c.spectrogram.hop = s.GetSize("features.hop");
  c.spectrogram.window = ParseWindow(s.Get("features.window"));
  c.spectrogram.bins_kept = s.GetSize("features.bins");
  c.spectrogram.Validate();
  c.cqt.f_min = s.GetDouble("features.cqt_f_min");
  c.cqt.bins = s.GetSize("features.cqt_bins");
  c.cqt.bins_per_octave = s.GetSize("features.cqt_bins_per_octave");
  c.cqt.q_scale = s.GetDouble("features.cqt_q_scale");
  c.cqt.hop = c.spectrogram.hop;
  c.cqt.frame_offset = s.GetSize("features.cqt_frame_offset");
  c.log_floor = s.GetDouble("features.log_floor");
  if (!(c.log_floor > 0.0)) throw ConfigError("features.log_floor must be positive");
  c.vad.frame = s.GetSize("features.vad_frame");
  c.vad.hop = s.GetSize("features.vad_hop");
  c.vad.threshold_db = s.GetDouble("features.vad_threshold_db");
  if (c.vad.frame == 0 || c.vad.hop == 0)
    throw ConfigError("features.vad_frame and features.vad_hop must be positive");
  if (c.features == FeatureKind::kBoth && c.spectrogram.bins_kept != c.cqt.bins)
    throw ConfigError("features.kind = spec+cqt needs features.bins == features.cqt_bins");

  c.model.kind = models::ParseModelKind(s.Get("model.kind"));
  c.model.width_multiplier = s.GetDouble("model.width_multiplier");
  c.model.dropout_profile = models::ParseDropoutProfile(s.Get("model.dropout"));
  c.model.chunk_samples = s.GetSize("model.chunk_samples");
  c.model = c.ModelFor(c.model.kind);
  c.model.Validate();

  c.cnn.optimizer.kind = nnet::ParseOptimizerKind(s.Get("train.cnn_optimizer"));
  c.cnn.optimizer.learning_rate = s.GetDouble("train.cnn_learning_rate");
  c.cnn.batch_size = s.GetSize("train.batch_size");
  c.cnn.max_epochs = s.GetSize("train.max_epochs");
  c.cnn.patience = s.GetSize("train.patience");
  if (c.cnn.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  c.sincnet.optimizer.kind = nnet::ParseOptimizerKind(s.Get("train.sinc_optimizer"));
  c.sincnet.epoch_learning_rates = s.GetDoubleList("train.sinc_learning_rates");
  if (c.sincnet.epoch_learning_rates.empty())
    throw ConfigError("train.sinc_learning_rates needs at least one value");
  c.sincnet.optimizer.learning_rate = c.sincnet.epoch_learning_rates.front();
  c.sincnet.batches_per_epoch = s.GetSize("train.sinc_batches_per_epoch");
  c.sincnet.valid_batches = s.GetSize("train.sinc_valid_batches");
  c.chunk_pairs = s.GetSize("train.chunk_pairs");
  if (c.chunk_pairs == 0) throw ConfigError("train.chunk_pairs must be positive");

  c.group_by = eval::ParseGroupBy(s.Get("eval.group_by"));
  c.scoring.frame_samples = c.model.chunk_samples;
  c.scoring.shift_samples = s.GetSize("eval.shift_samples");
  if (c.scoring.shift_samples == 0)
    throw ConfigError("eval.shift_samples must be positive");

  c.k_hold = s.GetSize("crossval.k_hold");
  if (c.k_hold == 0) throw ConfigError("crossval.k_hold must be positive");
  return c;
}

std::size_t RunConfig::WorkerThreads() const {
  if (deterministic) return 1;
  if (threads > 0) return threads;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::string RunConfig::SpectrogramHash() const {
  return Sha256Hex("spectrogram|" + spectrogram.ToString() +
                   "|log_floor=" + FormatNumber(log_floor));
}

std::string RunConfig::CqtHash() const {
  return Sha256Hex("cqt|" + cqt.ToString() + "|log_floor=" + FormatNumber(log_floor));
}

std::string RunConfig::FeatureHash(models::ModelKind kind) const {
  if (kind == models::ModelKind::kSincNet)
    return Sha256Hex("waveform|mvn|" + vad.ToString());
  std::string text = std::string("cnn|") + ToString(features);
  if (features != FeatureKind::kCqt) text += "|" + SpectrogramHash();
  if (features != FeatureKind::kSpectrogram) text += "|" + CqtHash();
  return Sha256Hex(text);
}

models::ModelSpec RunConfig::ModelFor(models::ModelKind kind) const {
  models::ModelSpec spec = model;
  spec.kind = kind;
  spec.input_channels = features == FeatureKind::kBoth ? 2 : 1;
  spec.input_bins =
      features == FeatureKind::kCqt ? cqt.bins : spectrogram.bins_kept;
  return spec;
}

}  // namespace antispoof::cli
