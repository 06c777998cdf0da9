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

#include "antispoof/dataio.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace antispoof {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

const char* ToString(Key key) {
  return key == Key::kBonafide ? "bonafide" : "spoof";
}

const char* ToString(Partition partition) {
  switch (partition) {
    case Partition::kTrain: return "train";
    case Partition::kDev: return "dev";
    case Partition::kEval: return "eval";
  }
  return "?";
}

Partition ParsePartition(std::string_view text) {
  if (text == "train") return Partition::kTrain;
  if (text == "dev") return Partition::kDev;
  if (text == "eval") return Partition::kEval;
  throw ConfigError("unknown partition '" + std::string(text) + "'");
}

std::vector<std::string> ProtocolSet::Speakers() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.speaker_id).second) out.push_back(r.speaker_id);
  return out;
}

std::vector<std::string> ProtocolSet::Attacks() const {
  std::set<std::string> attacks;
  for (const auto& r : records)
    if (r.attack_id) attacks.insert(*r.attack_id);
  return {attacks.begin(), attacks.end()};
}

const TrialRecord* ProtocolSet::Find(std::string_view utt_id) const {
  for (const auto& r : records)
    if (r.utt_id == utt_id) return &r;
  return nullptr;
}

namespace dataio {
namespace {

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <typename F>
void ForEachLine(std::string_view text, F&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

std::uint32_t ReadU32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

std::uint16_t ReadU16(std::string_view bytes, std::size_t offset) {
  std::uint16_t v;
  std::memcpy(&v, bytes.data() + offset, 2);
  return v;
}

void AppendU32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}

void AppendU16(std::string& out, std::uint16_t v) {
  out.append(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace

ProtocolSet ParseProtocol(std::string_view text, Partition partition) {
  ProtocolSet protocol;
  protocol.partition = partition;
  std::unordered_set<std::string> seen;
  ForEachLine(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = SplitWhitespace(line);
    if (fields.empty()) return;
    auto fail = [&](const std::string& what) {
      throw ParseError("protocol line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 5)
      fail("expected 5 fields, got " + std::to_string(fields.size()));
    TrialRecord r;
    r.speaker_id = fields[0];
    r.utt_id = fields[1];
    if (fields[2] != "-") r.env_id = std::string(fields[2]);
    if (fields[3] != "-") r.attack_id = std::string(fields[3]);
    const std::string key = Lower(fields[4]);
    if (key == "bonafide")
      r.key = Key::kBonafide;
    else if (key == "spoof")
      r.key = Key::kSpoof;
    else
      fail("unknown key '" + std::string(fields[4]) + "'");
    if (r.key == Key::kSpoof && !r.attack_id)
      fail("spoof trial " + r.utt_id + " has no attack id");
    if (r.key == Key::kBonafide && r.attack_id)
      fail("bonafide trial " + r.utt_id + " has attack id " + *r.attack_id);
    if (!seen.insert(r.utt_id).second)
      fail("duplicate utterance id " + r.utt_id);
    protocol.records.push_back(std::move(r));
  });
  return protocol;
}

ProtocolSet ReadProtocol(const std::filesystem::path& path,
                         Partition partition) {
  return ParseProtocol(ReadFile(path), partition);
}

std::string FormatProtocol(const ProtocolSet& protocol) {
  std::string out;
  for (const auto& r : protocol.records) {
    out += r.speaker_id + ' ' + r.utt_id + ' ' + r.env_id.value_or("-") + ' ' +
           r.attack_id.value_or("-") + ' ' + ToString(r.key) + '\n';
  }
  return out;
}

void WriteProtocol(const ProtocolSet& protocol,
                   const std::filesystem::path& path) {
  WriteFile(path, FormatProtocol(protocol));
}

std::filesystem::path AudioPath(const std::filesystem::path& root,
                                std::string_view utt_id) {
  return root / (std::string(utt_id) + ".wav");
}

Waveform DecodeWav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" ||
      bytes.substr(8, 4) != "WAVE")
    throw FormatError("not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = ReadU32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError("truncated WAV chunk");
    if (id == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk");
      const std::uint16_t format = ReadU16(bytes, body);
      channels = ReadU16(bytes, body + 2);
      rate = ReadU32(bytes, body + 4);
      bits = ReadU16(bytes, body + 14);
      if (format != 1)
        throw FormatError("unsupported WAV encoding " + std::to_string(format) +
                          " (PCM only)");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("WAV data chunk before fmt chunk");
      if (channels != 1)
        throw FormatError("expected mono audio, got " +
                          std::to_string(channels) + " channels");
      if (bits != 16)
        throw FormatError("expected 16-bit PCM, got " + std::to_string(bits) +
                          " bits");
      if (rate == 0) throw FormatError("zero sample rate");
      const std::size_t count = size / 2;
      if (count == 0) throw FormatError("empty audio");
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::int16_t s;
        std::memcpy(&s, bytes.data() + body + 2 * i, 2);
        w.samples[i] = s / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("WAV file has no data chunk");
}

Waveform LoadWaveform(const std::filesystem::path& path) {
  try {
    return DecodeWav(ReadFile(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void WriteWaveform(const Waveform& wave, const std::filesystem::path& path) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(2 * wave.size());
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  AppendU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  AppendU32(out, 16);
  AppendU16(out, 1);
  AppendU16(out, 1);
  AppendU32(out, static_cast<std::uint32_t>(wave.sample_rate));
  AppendU32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  AppendU16(out, 2);
  AppendU16(out, 16);
  out += "data";
  AppendU32(out, data_bytes);
  for (double x : wave.samples) {
    const double scaled = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    const auto s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    out.append(reinterpret_cast<const char*>(&s), 2);
  }
  WriteFile(path, out);
}

std::string FormatScores(const ScoreSet& scores) {
  std::string out;
  char buf[64];
  for (const auto& [utt, score] : scores) {
    if (!std::isfinite(score))
      throw InputError("non-finite score for " + utt);
    auto res = std::to_chars(buf, buf + sizeof(buf), score);
    out += utt;
    out += ' ';
    out.append(buf, res.ptr);
    out += '\n';
  }
  return out;
}

ScoreSet ParseScores(std::string_view text) {
  ScoreSet scores;
  ForEachLine(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = SplitWhitespace(line);
    if (fields.empty()) return;
    auto fail = [&](const std::string& what) {
      throw ParseError("score line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 2)
      fail("expected '<utt_id> <score>', got " + std::to_string(fields.size()) +
           " fields");
    double value = 0.0;
    const auto num = fields[1];
    auto res = std::from_chars(num.data(), num.data() + num.size(), value);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size())
      fail("cannot parse score '" + std::string(num) + "'");
    if (!std::isfinite(value)) fail("non-finite score");
    if (!scores.emplace(std::string(fields[0]), value).second)
      fail("duplicate utterance id " + std::string(fields[0]));
  });
  return scores;
}

void WriteScores(const ScoreSet& scores, const std::filesystem::path& path) {
  WriteFile(path, FormatScores(scores));
}

ScoreSet ReadScores(const std::filesystem::path& path) {
  return ParseScores(ReadFile(path));
}

std::string EncodeFeatureCache(const FeatureMap& features) {
  if (features.bins() == 0 || features.frames() == 0 ||
      features.channels() == 0)
    throw FormatError("refusing to cache a degenerate " +
                      std::to_string(features.bins()) + "x" +
                      std::to_string(features.frames()) + "x" +
                      std::to_string(features.channels()) + " feature map");
  std::string out = "AFC1";
  AppendU32(out, static_cast<std::uint32_t>(features.bins()));
  AppendU32(out, static_cast<std::uint32_t>(features.frames()));
  AppendU32(out, static_cast<std::uint32_t>(features.channels()));
  out.reserve(out.size() + 4 * features.size());
  for (double v : features.data()) {
    const float f = static_cast<float>(v);
    out.append(reinterpret_cast<const char*>(&f), 4);
  }
  return out;
}

FeatureMap DecodeFeatureCache(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != "AFC1")
    throw FormatError("bad feature cache magic");
  const std::size_t bins = ReadU32(bytes, 4);
  const std::size_t frames = ReadU32(bytes, 8);
  const std::size_t channels = ReadU32(bytes, 12);
  if (bins == 0 || frames == 0 || channels == 0)
    throw FormatError("feature cache header has a zero dimension");
  const std::size_t count = bins * frames * channels;
  if (bytes.size() != 16 + 4 * count)
    throw FormatError("feature cache payload is " +
                      std::to_string(bytes.size() - 16) + " bytes, header says " +
                      std::to_string(4 * count));
  FeatureMap features(bins, frames, channels);
  auto data = features.data();
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 16 + 4 * i, 4);
    data[i] = f;
  }
  return features;
}

void WriteFeatureCache(const FeatureMap& features,
                       const std::filesystem::path& path) {
  WriteFile(path, EncodeFeatureCache(features));
}

FeatureMap ReadFeatureCache(const std::filesystem::path& path) {
  try {
    return DecodeFeatureCache(ReadFile(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace dataio
}  // namespace antispoof
