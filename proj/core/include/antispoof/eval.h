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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "antispoof/common.h"
#include "antispoof/dataio.h"
#include "antispoof/dsp.h"
#include "antispoof/models.h"

namespace antispoof::eval {

struct LabeledTrial {
  std::string utt_id;
  double score = 0.0;
  Key key = Key::kBonafide;
  std::optional<std::string> env_id;
  std::optional<std::string> attack_id;
};

using LabeledScores = std::vector<LabeledTrial>;

// Joins scores with protocol labels. Throws InputError listing protocol
// utterances without a score.
LabeledScores JoinScores(const ScoreSet& scores, const ProtocolSet& protocol);

// Error rates at one threshold t: miss = bonafide < t, false alarm =
// spoof >= t.
struct OperatingPoint {
  double threshold;
  double miss_rate;
  double false_alarm_rate;
};

// Thresholds at the lowest score, every midpoint between adjacent distinct
// scores, and just above the highest score. The lowest and highest
// thresholds behave like -inf and +inf.
std::vector<OperatingPoint> OperatingPoints(const LabeledScores& trials);

struct EerResult {
  double eer;
  double threshold;
};

// Crossing of the miss and false-alarm curves, linearly interpolated
// between the bracketing operating points.
EerResult ComputeEer(const LabeledScores& trials);
// The same crossing rule applied to an arbitrary operating-point list
// ordered by increasing threshold.
EerResult EerFromOperatingPoints(const std::vector<OperatingPoint>& points);

// Normalized tandem detection cost. With CM miss rate Pm(t) and false alarm
// rate Pfa(t):
//   C1 = P_tar (C_miss_cm - C_miss_asv Pmiss_asv) - P_non C_fa_asv Pfa_asv
//   C2 = C_fa_cm P_spoof Pfa_spoof_asv
//   tDCF(t) = (C1 Pm(t) + C2 Pfa(t)) / min(C1, C2)
// The defaults are the published challenge cost model; the ASV error rates
// come from an external ASV system.
struct TdcfParams {
  double prior_target = 0.9405;
  double prior_nontarget = 0.0095;
  double prior_spoof = 0.05;
  double cost_miss_asv = 1.0;
  double cost_fa_asv = 10.0;
  double cost_miss_cm = 1.0;
  double cost_fa_cm = 10.0;
  double asv_miss_rate = 0.0;
  double asv_fa_rate = 0.0;
  double asv_spoof_fa_rate = 1.0;

  void Validate() const;
  double C1() const;
  double C2() const;
};

// key = value lines; '#' starts a comment. Unknown keys are errors.
TdcfParams ParseTdcfParams(std::string_view text);
TdcfParams ReadTdcfParams(const std::filesystem::path& path);
std::string FormatTdcfParams(const TdcfParams& params);

struct TdcfResult {
  double min_tdcf;
  double threshold;
};

TdcfResult ComputeMinTdcf(const LabeledScores& trials, const TdcfParams& params);

enum class GroupBy { kEnvAttackPair, kAttackId };

const char* ToString(GroupBy group_by);
GroupBy ParseGroupBy(const std::string& text);

// Condition label of a spoof trial. kEnvAttackPair combines the first
// letter of the environment id with the first letter of the attack id, both
// upper-cased ("aaa" + "BC" -> "AB").
std::optional<std::string> ConditionOf(const LabeledTrial& trial,
                                       GroupBy group_by);

struct ConditionMetrics {
  std::string condition;
  std::size_t bonafide = 0;
  std::size_t spoof = 0;
  double eer = 0.0;
  double min_tdcf = 0.0;
};

struct Breakdown {
  std::vector<ConditionMetrics> conditions;  // sorted by condition
  std::vector<std::string> warnings;
};

// Metrics over all bonafide trials plus the spoof trials of each condition.
Breakdown ConditionBreakdown(const LabeledScores& trials, GroupBy group_by,
                             const TdcfParams& params);

struct Report {
  std::size_t bonafide = 0;
  std::size_t spoof = 0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double min_tdcf = 0.0;
  double tdcf_threshold = 0.0;
  GroupBy group_by = GroupBy::kAttackId;
  Breakdown breakdown;

  // condition,bonafide,spoof,eer,min_tdcf; first row "pooled".
  std::string ToCsv() const;
  // Pooled line plus one row per metric with a column per condition.
  std::string ToText() const;
};

Report Evaluate(const LabeledScores& trials, GroupBy group_by,
                const TdcfParams& params);

// Equal-weight mean per utterance. Throws InputError listing ids missing
// from any set.
ScoreSet Fuse(const std::vector<ScoreSet>& sets);

// bonafide logit - spoof logit of one pass over the whole utterance, with
// the time axis truncated to an even count.
double ScoreUtteranceCnn(const models::Model<float>& model,
                         const FeatureMap& features);

struct SincScoringConfig {
  std::size_t frame_samples = 3200;  // 200 ms
  std::size_t shift_samples = 160;   // 10 ms
};

// Per-frame LLRs log p(bonafide) - log p(spoof) of a preprocessed waveform.
// The sinc layer runs once over the whole utterance and frames share it.
std::vector<double> FrameLlrs(const models::Model<float>& model,
                              const Waveform& preprocessed,
                              const SincScoringConfig& config = {});

// Mean of FrameLlrs.
double ScoreUtteranceSincNet(const models::Model<float>& model,
                             const Waveform& preprocessed,
                             const SincScoringConfig& config = {});

}  // namespace antispoof::eval
