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

#include <cmath>
#include <cstring>
#include <limits>

#include "antispoof/dataio.h"
#include "doctest.h"
#include "temp_dir.h"

using namespace antispoof;

TEST_CASE("protocol parses the five-field layout and round-trips") {
  const std::string text =
      "SPK_1 U1 - - bonafide\n"
      "\n"
      "SPK_1 U2 aaa AB spoof\n"
      "SPK_2 U3 - A01 spoof\n";
  const ProtocolSet p = dataio::ParseProtocol(text, Partition::kDev);
  REQUIRE(p.records.size() == 3);
  CHECK(p.partition == Partition::kDev);
  CHECK(p.records[0].key == Key::kBonafide);
  CHECK_FALSE(p.records[0].env_id.has_value());
  CHECK(p.records[1].env_id == std::optional<std::string>("aaa"));
  CHECK(p.records[1].attack_id == std::optional<std::string>("AB"));
  CHECK(p.Speakers() == std::vector<std::string>{"SPK_1", "SPK_2"});
  CHECK(p.Attacks() == std::vector<std::string>{"A01", "AB"});
  REQUIRE(p.Find("U3") != nullptr);
  CHECK(p.Find("U3")->speaker_id == "SPK_2");
  CHECK(p.Find("missing") == nullptr);

  const ProtocolSet again = dataio::ParseProtocol(dataio::FormatProtocol(p), Partition::kDev);
  CHECK(again.records == p.records);
}

TEST_CASE("protocol errors carry the line number") {
  auto message_of = [](const std::string& text) {
    try {
      dataio::ParseProtocol(text, Partition::kTrain);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of("S U1 - - bonafide\nS U2 - -\n").find("line 2") != std::string::npos);
  CHECK(message_of("S U1 - - genuine\n").find("unknown key") != std::string::npos);
  CHECK(message_of("S U1 - - spoof\n").find("no attack id") != std::string::npos);
  CHECK(message_of("S U1 - A1 bonafide\n").find("has attack id") != std::string::npos);
  CHECK(message_of("S U1 - - bonafide\nS U1 - - bonafide\n").find("duplicate") !=
        std::string::npos);
}

TEST_CASE("partition names parse and unknown names are config errors") {
  CHECK(ParsePartition("train") == Partition::kTrain);
  CHECK(ParsePartition("dev") == Partition::kDev);
  CHECK(ParsePartition("eval") == Partition::kEval);
  CHECK_THROWS_AS(ParsePartition("test"), ConfigError);
}

TEST_CASE("PCM16 WAV round trip quantizes to 1/32768 steps") {
  testing_support::TempDir dir;
  Waveform w;
  w.sample_rate = 8000;
  for (int i = 0; i < 1000; ++i) w.samples.push_back(0.9 * std::sin(0.01 * i));
  w.samples.push_back(1.5);   // clipped to the largest code
  w.samples.push_back(-2.0);  // clipped to -1
  const auto path = dir / "a.wav";
  dataio::WriteWaveform(w, path);
  const Waveform r = dataio::LoadWaveform(path);
  CHECK(r.sample_rate == 8000);
  REQUIRE(r.size() == w.size());
  for (std::size_t i = 0; i < 1000; ++i) CHECK(std::abs(r.samples[i] - w.samples[i]) <= 0.5 / 32768 + 1e-12);
  CHECK(r.samples[1000] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.samples[1001] == -1.0);

  // Writing what was read reproduces the file byte for byte.
  dataio::WriteWaveform(r, dir / "b.wav");
  CHECK(dataio::ReadFile(path) == dataio::ReadFile(dir / "b.wav"));
}

TEST_CASE("malformed WAV input is a format error") {
  testing_support::TempDir dir;
  Waveform w;
  w.samples.assign(100, 0.1);
  dataio::WriteWaveform(w, dir / "ok.wav");
  const std::string good = dataio::ReadFile(dir / "ok.wav");

  CHECK_THROWS_AS(dataio::DecodeWav("not audio at all"), FormatError);
  CHECK_THROWS_AS(dataio::DecodeWav(good.substr(0, good.size() - 10)), FormatError);
  std::string stereo = good;
  const std::uint16_t two = 2;
  std::memcpy(stereo.data() + 22, &two, 2);
  CHECK_THROWS_AS(dataio::DecodeWav(stereo), FormatError);
  std::string eight_bit = good;
  const std::uint16_t eight = 8;
  std::memcpy(eight_bit.data() + 34, &eight, 2);
  CHECK_THROWS_AS(dataio::DecodeWav(eight_bit), FormatError);
  CHECK_THROWS_AS(dataio::LoadWaveform(dir / "missing.wav"), InputError);
}

TEST_CASE("scores round-trip exactly") {
  ScoreSet s{{"a", 0.1}, {"b", -1e-300}, {"c", 12345.678901234567}, {"d", 1.0 / 3.0}};
  const ScoreSet r = dataio::ParseScores(dataio::FormatScores(s));
  CHECK(r == s);
  CHECK_THROWS_AS(dataio::ParseScores("a 1\na 2\n"), ParseError);
  CHECK_THROWS_AS(dataio::ParseScores("a x\n"), ParseError);
  CHECK_THROWS_AS(dataio::ParseScores("a 1 2\n"), ParseError);
  CHECK_THROWS_AS(dataio::ParseScores("a nan\n"), InputError);
}

TEST_CASE("feature cache round trip narrows to float32") {
  FeatureMap f(3, 4, 2);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t b = 0; b < 3; ++b) f.at(b, t, c) = 0.1 * b + t - 3.3 * c + 1e-9;
  const std::string bytes = dataio::EncodeFeatureCache(f);
  CHECK(bytes.size() == 16 + 4 * 24);
  CHECK(bytes.substr(0, 4) == "AFC1");
  const FeatureMap r = dataio::DecodeFeatureCache(bytes);
  REQUIRE(r.bins() == 3);
  REQUIRE(r.frames() == 4);
  REQUIRE(r.channels() == 2);
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(r.data()[i] == static_cast<double>(static_cast<float>(f.data()[i])));

  CHECK_THROWS_AS(dataio::DecodeFeatureCache("XXXX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(dataio::DecodeFeatureCache(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(dataio::EncodeFeatureCache(FeatureMap()), FormatError);
}

TEST_CASE("feature map slicing keeps every channel") {
  FeatureMap f(2, 5, 2);
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = static_cast<double>(i);
  const FeatureMap s = f.SliceFrames(1, 3);
  CHECK(s.frames() == 3);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t b = 0; b < 2; ++b) CHECK(s.at(b, t, c) == f.at(b, t + 1, c));
  CHECK_THROWS_AS(f.SliceFrames(3, 3), InputError);
}
