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

#include "antispoof/eval.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "antispoof/pipeline.h"

namespace antispoof::eval {

LabeledScores JoinScores(const ScoreSet& scores, const ProtocolSet& protocol) {
  LabeledScores out;
  out.reserve(protocol.records.size());
  std::vector<std::string> missing;
  for (const auto& r : protocol.records) {
    auto it = scores.find(r.utt_id);
    if (it == scores.end()) {
      missing.push_back(r.utt_id);
      continue;
    }
    out.push_back(LabeledTrial{r.utt_id, it->second, r.key, r.env_id, r.attack_id});
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      list += (i ? " " : "") + missing[i];
    if (missing.size() > 20) list += " ...";
    throw InputError(std::to_string(missing.size()) +
                     " protocol utterance(s) have no score: " + list);
  }
  return out;
}

namespace {

void CheckBothClasses(std::size_t bonafide, std::size_t spoof) {
  if (bonafide == 0 || spoof == 0)
    throw InputError("metrics need at least one bonafide and one spoof trial (got " +
                     std::to_string(bonafide) + " bonafide, " + std::to_string(spoof) +
                     " spoof)");
}

}  // namespace

std::vector<OperatingPoint> OperatingPoints(const LabeledScores& trials) {
  std::vector<std::pair<double, bool>> sorted;  // (score, is_bonafide)
  sorted.reserve(trials.size());
  std::size_t n_bona = 0;
  for (const auto& t : trials) {
    if (!std::isfinite(t.score))
      throw InputError("score of " + t.utt_id + " is not finite");
    const bool bona = t.key == Key::kBonafide;
    n_bona += bona;
    sorted.emplace_back(t.score, bona);
  }
  const std::size_t n_spoof = trials.size() - n_bona;
  CheckBothClasses(n_bona, n_spoof);
  std::sort(sorted.begin(), sorted.end());

  std::vector<OperatingPoint> points;
  // At the lowest score nothing is missed and every spoof is accepted.
  points.push_back({sorted.front().first, 0.0, 1.0});
  std::size_t bona_below = 0, spoof_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      (sorted[j].second ? bona_below : spoof_below) += 1;
      ++j;
    }
    const double threshold =
        j < sorted.size() ? sorted[i].first + (sorted[j].first - sorted[i].first) / 2.0
                          : std::nextafter(sorted[i].first, HUGE_VAL);
    points.push_back({threshold,
                      static_cast<double>(bona_below) / static_cast<double>(n_bona),
                      static_cast<double>(n_spoof - spoof_below) /
                          static_cast<double>(n_spoof)});
    i = j;
  }
  return points;
}

EerResult EerFromOperatingPoints(const std::vector<OperatingPoint>& points) {
  if (points.empty()) throw InputError("no operating points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const double d = p.miss_rate - p.false_alarm_rate;
    if (d < 0.0) continue;
    if (d == 0.0 || i == 0) return {(p.miss_rate + p.false_alarm_rate) / 2.0, p.threshold};
    const auto& q = points[i - 1];
    const double dq = q.miss_rate - q.false_alarm_rate;
    // Linear interpolation between q (miss < fa) and p (miss > fa).
    const double alpha = -dq / (d - dq);
    return {q.miss_rate + alpha * (p.miss_rate - q.miss_rate),
            q.threshold + alpha * (p.threshold - q.threshold)};
  }
  const auto& last = points.back();
  return {(last.miss_rate + last.false_alarm_rate) / 2.0, last.threshold};
}

EerResult ComputeEer(const LabeledScores& trials) {
  return EerFromOperatingPoints(OperatingPoints(trials));
}

void TdcfParams::Validate() const {
  const double priors[] = {prior_target, prior_nontarget, prior_spoof};
  for (double p : priors)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("t-DCF priors must lie in [0, 1]");
  if (std::abs(prior_target + prior_nontarget + prior_spoof - 1.0) > 1e-9)
    throw ConfigError("t-DCF priors must sum to 1");
  const double costs[] = {cost_miss_asv, cost_fa_asv, cost_miss_cm, cost_fa_cm};
  for (double c : costs)
    if (!(c > 0.0)) throw ConfigError("t-DCF costs must be positive");
  const double rates[] = {asv_miss_rate, asv_fa_rate, asv_spoof_fa_rate};
  for (double r : rates)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("ASV error rates must lie in [0, 1]");
  if (!(C1() > 0.0) || !(C2() > 0.0))
    throw ConfigError("degenerate t-DCF parameters: C1 = " + FormatNumber(C1()) +
                      ", C2 = " + FormatNumber(C2()) + " (both must be positive)");
}

double TdcfParams::C1() const {
  return prior_target * (cost_miss_cm - cost_miss_asv * asv_miss_rate) -
         prior_nontarget * cost_fa_asv * asv_fa_rate;
}

double TdcfParams::C2() const { return cost_fa_cm * prior_spoof * asv_spoof_fa_rate; }

namespace {

struct TdcfField {
  const char* key;
  double TdcfParams::*member;
};

constexpr TdcfField kTdcfFields[] = {
    {"prior_target", &TdcfParams::prior_target},
    {"prior_nontarget", &TdcfParams::prior_nontarget},
    {"prior_spoof", &TdcfParams::prior_spoof},
    {"cost_miss_asv", &TdcfParams::cost_miss_asv},
    {"cost_fa_asv", &TdcfParams::cost_fa_asv},
    {"cost_miss_cm", &TdcfParams::cost_miss_cm},
    {"cost_fa_cm", &TdcfParams::cost_fa_cm},
    {"asv_miss_rate", &TdcfParams::asv_miss_rate},
    {"asv_fa_rate", &TdcfParams::asv_fa_rate},
    {"asv_spoof_fa_rate", &TdcfParams::asv_spoof_fa_rate},
};

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

TdcfParams ParseTdcfParams(std::string_view text) {
  TdcfParams params;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("t-DCF config line " + std::to_string(line_no) +
                       ": expected key = value");
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    const TdcfField* field = nullptr;
    for (const auto& f : kTdcfFields)
      if (key == f.key) field = &f;
    if (!field)
      throw ParseError("t-DCF config line " + std::to_string(line_no) + ": unknown key '" +
                       std::string(key) + "'");
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
      throw ParseError("t-DCF config line " + std::to_string(line_no) + ": bad number '" +
                       std::string(value) + "'");
    params.*(field->member) = v;
  }
  params.Validate();
  return params;
}

TdcfParams ReadTdcfParams(const std::filesystem::path& path) {
  return ParseTdcfParams(dataio::ReadFile(path));
}

std::string FormatTdcfParams(const TdcfParams& params) {
  std::string out;
  for (const auto& f : kTdcfFields)
    out += std::string(f.key) + " = " + FormatNumber(params.*(f.member)) + "\n";
  return out;
}

TdcfResult ComputeMinTdcf(const LabeledScores& trials, const TdcfParams& params) {
  params.Validate();
  const double c1 = params.C1(), c2 = params.C2();
  const double norm = std::min(c1, c2);
  TdcfResult best{HUGE_VAL, 0.0};
  for (const auto& p : OperatingPoints(trials)) {
    const double cost = (c1 * p.miss_rate + c2 * p.false_alarm_rate) / norm;
    if (cost < best.min_tdcf) best = {cost, p.threshold};
  }
  return best;
}

const char* ToString(GroupBy group_by) {
  return group_by == GroupBy::kEnvAttackPair ? "env_attack_pair" : "attack_id";
}

GroupBy ParseGroupBy(const std::string& text) {
  if (text == "env_attack_pair") return GroupBy::kEnvAttackPair;
  if (text == "attack_id") return GroupBy::kAttackId;
  throw ConfigError("unknown grouping '" + text + "' (expected env_attack_pair or attack_id)");
}

std::optional<std::string> ConditionOf(const LabeledTrial& trial, GroupBy group_by) {
  if (trial.key != Key::kSpoof || !trial.attack_id || trial.attack_id->empty())
    return std::nullopt;
  if (group_by == GroupBy::kAttackId) return trial.attack_id;
  if (!trial.env_id || trial.env_id->empty()) return std::nullopt;
  const auto upper = [](char c) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  };
  return std::string{upper(trial.env_id->front()), upper(trial.attack_id->front())};
}

Breakdown ConditionBreakdown(const LabeledScores& trials, GroupBy group_by,
                             const TdcfParams& params) {
  LabeledScores bonafide;
  std::map<std::string, LabeledScores> spoof_by_condition;
  std::size_t unlabeled = 0;
  for (const auto& t : trials) {
    if (t.key == Key::kBonafide) {
      bonafide.push_back(t);
    } else if (auto c = ConditionOf(t, group_by)) {
      spoof_by_condition[*c].push_back(t);
    } else {
      ++unlabeled;
    }
  }
  Breakdown out;
  if (unlabeled > 0)
    out.warnings.push_back(std::to_string(unlabeled) + " spoof trial(s) lack the fields for " +
                           ToString(group_by) + " grouping and were left out");
  if (bonafide.empty()) {
    out.warnings.push_back("no bonafide trials: per-condition metrics omitted");
    return out;
  }
  for (auto& [condition, spoof] : spoof_by_condition) {
    LabeledScores subset = bonafide;
    subset.insert(subset.end(), spoof.begin(), spoof.end());
    ConditionMetrics m;
    m.condition = condition;
    m.bonafide = bonafide.size();
    m.spoof = spoof.size();
    m.eer = ComputeEer(subset).eer;
    m.min_tdcf = ComputeMinTdcf(subset, params).min_tdcf;
    out.conditions.push_back(std::move(m));
  }
  return out;
}

std::string Report::ToCsv() const {
  std::ostringstream ss;
  ss << "condition,bonafide,spoof,eer,min_tdcf\n";
  ss << "pooled," << bonafide << ',' << spoof << ',' << FormatNumber(eer) << ','
     << FormatNumber(min_tdcf) << '\n';
  for (const auto& c : breakdown.conditions)
    ss << c.condition << ',' << c.bonafide << ',' << c.spoof << ',' << FormatNumber(c.eer)
       << ',' << FormatNumber(c.min_tdcf) << '\n';
  return ss.str();
}

std::string Report::ToText() const {
  std::ostringstream ss;
  ss << std::fixed;
  ss << "trials: " << bonafide << " bonafide, " << spoof << " spoof\n";
  ss << "pooled: EER " << std::setprecision(3) << 100.0 * eer << "%  min-tDCF "
     << std::setprecision(4) << min_tdcf << "\n";
  for (const auto& w : breakdown.warnings) ss << "warning: " << w << "\n";
  if (breakdown.conditions.empty()) return ss.str();
  ss << "\nper condition (" << ToString(group_by) << "):\n";
  constexpr int kLabel = 10, kCol = 9;
  ss << std::left << std::setw(kLabel) << "metric" << std::right;
  for (const auto& c : breakdown.conditions) ss << std::setw(kCol) << c.condition;
  ss << "\n" << std::left << std::setw(kLabel) << "EER[%]" << std::right;
  for (const auto& c : breakdown.conditions)
    ss << std::setw(kCol) << std::setprecision(3) << 100.0 * c.eer;
  ss << "\n" << std::left << std::setw(kLabel) << "min-tDCF" << std::right;
  for (const auto& c : breakdown.conditions)
    ss << std::setw(kCol) << std::setprecision(4) << c.min_tdcf;
  ss << "\n";
  return ss.str();
}

Report Evaluate(const LabeledScores& trials, GroupBy group_by, const TdcfParams& params) {
  Report report;
  for (const auto& t : trials) (t.key == Key::kBonafide ? report.bonafide : report.spoof)++;
  const auto eer = ComputeEer(trials);
  const auto tdcf = ComputeMinTdcf(trials, params);
  report.eer = eer.eer;
  report.eer_threshold = eer.threshold;
  report.min_tdcf = tdcf.min_tdcf;
  report.tdcf_threshold = tdcf.threshold;
  report.group_by = group_by;
  report.breakdown = ConditionBreakdown(trials, group_by, params);
  return report;
}

ScoreSet Fuse(const std::vector<ScoreSet>& sets) {
  if (sets.empty()) throw InputError("nothing to fuse");
  const ScoreSet& first = sets.front();
  for (std::size_t k = 1; k < sets.size(); ++k) {
    std::vector<std::string> only_first, only_other;
    for (const auto& [id, _] : first)
      if (!sets[k].count(id)) only_first.push_back(id);
    for (const auto& [id, _] : sets[k])
      if (!first.count(id)) only_other.push_back(id);
    if (only_first.empty() && only_other.empty()) continue;
    std::string msg = "score sets 1 and " + std::to_string(k + 1) + " cover different utterances;";
    auto list = [&msg](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" ") + label + ":";
      for (std::size_t i = 0; i < ids.size() && i < 10; ++i) msg += " " + ids[i];
      if (ids.size() > 10) msg += " ...";
    };
    list("only in set 1", only_first);
    list(("only in set " + std::to_string(k + 1)).c_str(), only_other);
    throw InputError(msg);
  }
  ScoreSet fused;
  std::vector<double> values(sets.size());
  for (const auto& [id, _] : first) {
    for (std::size_t k = 0; k < sets.size(); ++k) values[k] = sets[k].at(id);
    // Summing in sorted order makes the mean independent of input order.
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    fused[id] = sum / static_cast<double>(sets.size());
  }
  return fused;
}

double ScoreUtteranceCnn(const models::Model<float>& model, const FeatureMap& features) {
  if (features.frames() < 2)
    throw InputError("utterance has " + std::to_string(features.frames()) +
                     " frame(s); CNN scoring needs at least 2");
  const auto logits = model.InferLogits(pipeline::FeatureTensor(features));
  return static_cast<double>(logits[0]) - static_cast<double>(logits[1]);
}

std::vector<double> FrameLlrs(const models::Model<float>& model, const Waveform& preprocessed,
                              const SincScoringConfig& config) {
  if (model.spec().kind != models::ModelKind::kSincNet)
    throw ConfigError("frame LLR scoring needs a SincNet model");
  const std::size_t frame = config.frame_samples, shift = config.shift_samples;
  if (frame != model.spec().chunk_samples || shift == 0)
    throw ConfigError("scoring frame of " + std::to_string(frame) +
                      " samples does not match the model's " +
                      std::to_string(model.spec().chunk_samples) + "-sample input");
  const std::size_t n = preprocessed.size();
  if (n < frame)
    throw InputError("utterance of " + std::to_string(n) + " samples is shorter than one " +
                     std::to_string(frame) + "-sample scoring frame");
  const std::size_t frames = 1 + (n - frame) / shift;
  const auto& net = model.net();

  nnet::Tensor<float> wave({1, n});
  for (std::size_t i = 0; i < n; ++i) wave[i] = static_cast<float>(preprocessed.samples[i]);
  const nnet::Tensor<float> filtered = net.layer(0).Infer(wave);  // [1, n - L + 1, K]
  const std::size_t rows = frame - (n - filtered.dim(1));           // per-frame length
  const std::size_t k = filtered.dim(2);

  constexpr std::size_t kFramesPerPass = 32;
  std::vector<double> llrs;
  llrs.reserve(frames);
  for (std::size_t start = 0; start < frames; start += kFramesPerPass) {
    const std::size_t count = std::min(kFramesPerPass, frames - start);
    nnet::Tensor<float> batch({count, rows, k});
    for (std::size_t f = 0; f < count; ++f) {
      const float* src = filtered.data() + (start + f) * shift * k;
      std::copy(src, src + rows * k, batch.data() + f * rows * k);
    }
    const auto logp = net.InferRange(std::move(batch), 1, net.size());
    for (std::size_t f = 0; f < count; ++f)
      llrs.push_back(static_cast<double>(logp[2 * f]) - static_cast<double>(logp[2 * f + 1]));
  }
  return llrs;
}

double ScoreUtteranceSincNet(const models::Model<float>& model, const Waveform& preprocessed,
                             const SincScoringConfig& config) {
  const auto llrs = FrameLlrs(model, preprocessed, config);
  double sum = 0.0;
  for (double v : llrs) sum += v;
  return sum / static_cast<double>(llrs.size());
}

}  // namespace antispoof::eval
