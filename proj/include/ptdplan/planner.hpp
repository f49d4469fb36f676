// Copyright 2026 The ptdplan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Strategy search over (p, t, b) for a user-fixed global batch size G.
//
// The pruned search walks p over divisors of n, t over powers of two up to the
// server size and b over powers of two, skipping (p, t) pairs the memory bounds
// reject, capping b at the memory-derived b_max and stopping the b scan once
// two consecutive doublings make the step slower. The exhaustive mode keeps
// only the structural and OOM filters.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ptdplan/calibration.hpp"
#include "ptdplan/config.hpp"
#include "ptdplan/cost_model.hpp"
#include "ptdplan/error.hpp"
#include "ptdplan/memory_model.hpp"

namespace ptdplan {

struct PlanRequest {
  HardwareConfig hardware;
  ModelConfig model;
  CalibrationTable calibration;
  int G = 1;
  std::int64_t S_t = 1;
  int top_k = 5;
  bool prune = true;
  CostOptions cost;
  int b_ceiling = kDefaultMicroBatchCeiling;

  /// The model with S_t taken from the request.
  ModelConfig effective_model() const {
    ModelConfig m = model;
    m.S_t = S_t;
    return m;
  }
};

inline void Validate(const PlanRequest& req) {
  if (req.G < 1) throw Error(ErrorKind::kInvalidValue, "global batch G must be ≥ 1");
  if (req.S_t < 1) throw Error(ErrorKind::kInvalidValue, "samples S_t must be ≥ 1");
  if (req.top_k < 1) throw Error(ErrorKind::kInvalidValue, "top_k must be ≥ 1");
  if (req.b_ceiling < 1) throw Error(ErrorKind::kInvalidValue, "b ceiling must be ≥ 1");
  Validate(req.hardware);
  Validate(req.model);
}

struct PlanEntry {
  ParallelStrategy strategy;
  TimeBreakdown time;
  MemoryEstimate memory;
  bool bubble_regime_warning = false;  // m < p: bubble formula outside its regime

  bool operator==(const PlanEntry&) const = default;
};

struct RankedPlan {
  std::vector<PlanEntry> entries;
  std::int64_t candidates_enumerated = 0;  // evaluated by the cost model
  std::int64_t candidates_pruned = 0;      // structural grid minus evaluated
  std::int64_t structural_grid = 0;
  double search_duration = 0;              // seconds; not part of the output bytes

  double pruned_fraction() const {
    const auto total = candidates_pruned + candidates_enumerated;
    return total == 0 ? 0.0 : static_cast<double>(candidates_pruned) / total;
  }
};

namespace detail {

/// Deterministic order: time, then larger t, smaller p, smaller b.
inline bool RanksBefore(const PlanEntry& x, const PlanEntry& y) {
  if (x.time.T_total != y.time.T_total) return x.time.T_total < y.time.T_total;
  if (x.strategy.t != y.strategy.t) return x.strategy.t > y.strategy.t;
  if (x.strategy.p != y.strategy.p) return x.strategy.p < y.strategy.p;
  return x.strategy.b < y.strategy.b;
}

inline PlanEntry Evaluate(const PlanRequest& req, const ModelConfig& model,
                          const ParallelStrategy& s) {
  PlanEntry e;
  e.strategy = s;
  e.time = TotalBreakdown(req.hardware, model, req.calibration, s, req.cost);
  e.memory = EstimateMemory(model, s);
  e.bubble_regime_warning = s.m < s.p;
  return e;
}

/// Evaluates one (p, t) group in ascending b. With early_stop the scan ends
/// after two consecutive doublings that each strictly increase T_total.
inline void EvaluateGroup(const PlanRequest& req, const ModelConfig& model,
                          const std::vector<ParallelStrategy>& group, bool early_stop,
                          std::vector<PlanEntry>& out) {
  double prev = 0;
  int worse_streak = 0;
  for (size_t i = 0; i < group.size(); ++i) {
    out.push_back(Evaluate(req, model, group[i]));
    const double now = out.back().time.T_total;
    if (i > 0) worse_streak = now > prev ? worse_streak + 1 : 0;
    prev = now;
    if (early_stop && worse_streak >= 2) break;
  }
}

}  // namespace detail

/// Number of (p, t, b) points that satisfy the structural constraints alone,
/// with t and b powers of two and b up to the request's ceiling.
inline std::int64_t StructuralGridSize(const PlanRequest& req) {
  const auto& hw = req.hardware;
  std::int64_t count = 0;
  for (int p = 1; p <= std::min(hw.n, req.model.L); ++p) {
    if (hw.n % p != 0) continue;
    for (int t = 1; t <= hw.npus_per_server; t *= 2) {
      if (hw.n % (p * t) != 0) continue;
      const int d = hw.n / (p * t);
      for (int b = 1; b <= req.b_ceiling; b *= 2) {
        if (ValidateStrategy(MakeStrategy(d, t, p, b, req.G), hw, req.model).ok()) ++count;
      }
    }
  }
  return count;
}

/// Candidate strategies in (p, t, b) ascending order; candidates sharing
/// (p, t) are contiguous. Throws NoFeasibleStrategy when nothing survives.
inline std::vector<ParallelStrategy> EnumerateCandidates(const PlanRequest& req) {
  Validate(req);
  const auto& hw = req.hardware;
  const auto& model = req.model;

  std::optional<BoundSet> bounds;
  if (req.prune) {
    try {
      bounds = FeasibilityBounds(hw, model, 1, std::nullopt, req.b_ceiling);
    } catch (const Error& e) {
      throw Error(ErrorKind::kNoFeasibleStrategy, e.what());
    }
  }

  std::vector<ParallelStrategy> out;
  for (int p = 1; p <= std::min(hw.n, model.L); ++p) {
    if (hw.n % p != 0) continue;
    for (int t = 1; t <= hw.npus_per_server; t *= 2) {
      if (hw.n % (p * t) != 0) continue;
      int b_max = req.b_ceiling;
      if (bounds) {
        if (t < bounds->t_min || !bounds->admits(p, t)) continue;
        b_max = bounds->b_max(p, t);
      }
      const int d = hw.n / (p * t);
      for (int b = 1; b <= b_max; b *= 2) {
        auto s = MakeStrategy(d, t, p, b, req.G);
        if (!ValidateStrategy(s, hw, model).ok()) continue;
        if (IsOom(hw, model, s)) continue;
        out.push_back(s);
      }
    }
  }
  if (out.empty()) {
    throw Error(ErrorKind::kNoFeasibleStrategy,
                "no (d,t,p,b) satisfies the structural and memory constraints for n=" +
                    std::to_string(hw.n) + ", G=" + std::to_string(req.G));
  }
  return out;
}

inline RankedPlan Plan(const PlanRequest& req) {
  const auto started = std::chrono::steady_clock::now();
  const auto candidates = EnumerateCandidates(req);
  const auto model = req.effective_model();

  std::vector<PlanEntry> evaluated;
  evaluated.reserve(candidates.size());
  for (size_t begin = 0; begin < candidates.size();) {
    size_t end = begin;
    while (end < candidates.size() && candidates[end].p == candidates[begin].p &&
           candidates[end].t == candidates[begin].t) {
      ++end;
    }
    const std::vector<ParallelStrategy> group(candidates.begin() + begin,
                                              candidates.begin() + end);
    detail::EvaluateGroup(req, model, group, req.prune, evaluated);
    begin = end;
  }

  RankedPlan plan;
  plan.structural_grid = StructuralGridSize(req);
  plan.candidates_enumerated = static_cast<std::int64_t>(evaluated.size());
  plan.candidates_pruned = std::max<std::int64_t>(0, plan.structural_grid - plan.candidates_enumerated);
  std::sort(evaluated.begin(), evaluated.end(), detail::RanksBefore);
  if (evaluated.size() > static_cast<size_t>(req.top_k)) evaluated.resize(req.top_k);
  plan.entries = std::move(evaluated);
  plan.search_duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return plan;
}

struct MicroBatchScan {
  std::vector<std::pair<int, double>> points;  // (b, T_total) in scan order
  int best_b = 0;
  double best_total = 0;
};

/// Scans power-of-two b at fixed (p, t) and the request's G, skipping values
/// that break divisibility or memory.
inline MicroBatchScan ScanMicroBatch(const PlanRequest& req, int p, int t, bool early_stop) {
  Validate(req);
  const auto& hw = req.hardware;
  const auto model = req.effective_model();
  if (p < 1 || t < 1 || hw.n % (p * t) != 0) {
    throw Error(ErrorKind::kInvalidArgument, "p·t must divide n");
  }
  const int d = hw.n / (p * t);
  std::vector<ParallelStrategy> group;
  for (int b = 1; b <= req.b_ceiling; b *= 2) {
    auto s = MakeStrategy(d, t, p, b, req.G);
    if (!ValidateStrategy(s, hw, model).ok() || IsOom(hw, model, s)) continue;
    group.push_back(s);
  }
  if (group.empty()) {
    throw Error(ErrorKind::kNoFeasibleStrategy, "no feasible b at this (p, t)");
  }
  std::vector<PlanEntry> evaluated;
  detail::EvaluateGroup(req, model, group, early_stop, evaluated);
  MicroBatchScan scan;
  for (const auto& e : evaluated) scan.points.emplace_back(e.strategy.b, e.time.T_total);
  const auto best = std::min_element(evaluated.begin(), evaluated.end(), detail::RanksBefore);
  scan.best_b = best->strategy.b;
  scan.best_total = best->time.T_total;
  return scan;
}

enum class SweepParameter { kGlobalBatch, kMicroBatch };

struct SweepPoint {
  int value = 0;
  bool ok = false;
  std::string error;  // IndivisibleValue diagnostic when !ok
  bool oom = false;
  ParallelStrategy strategy;
  double T_total = 0;
  double throughput = 0;
};

/// Evaluates `base` with one of G or b replaced by each value in turn; m is
/// re-derived so that G = b m d keeps holding. Bad values are reported per
/// point, not thrown.
inline std::vector<SweepPoint> Sweep(const PlanRequest& req, const ParallelStrategy& base,
                                     SweepParameter param, const std::vector<int>& values) {
  Validate(req);
  const auto model = req.effective_model();
  std::vector<SweepPoint> out;
  out.reserve(values.size());
  for (int v : values) {
    SweepPoint pt;
    pt.value = v;
    const int G = param == SweepParameter::kGlobalBatch ? v : base.G;
    const int b = param == SweepParameter::kMicroBatch ? v : base.b;
    if (v < 1) {
      pt.error = "IndivisibleValue: value must be positive";
      out.push_back(pt);
      continue;
    }
    pt.strategy = MakeStrategy(base.d, base.t, base.p, b, G);
    pt.strategy.B = base.B;
    const auto report = ValidateStrategy(pt.strategy, req.hardware, model);
    if (!report.ok()) {
      pt.error = "IndivisibleValue: " + report.violations.front();
      out.push_back(pt);
      continue;
    }
    const auto bd = TotalBreakdown(req.hardware, model, req.calibration, pt.strategy, req.cost);
    pt.ok = true;
    pt.oom = IsOom(req.hardware, model, pt.strategy);
    pt.T_total = bd.T_total;
    pt.throughput = bd.throughput;
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json ToJson(const PlanEntry& e) {
  return {{"strategy", ToJson(e.strategy)},
          {"time", ToJson(e.time)},
          {"memory", ToJson(e.memory)},
          {"bubble_regime_warning", e.bubble_regime_warning}};
}

inline nlohmann::json ToJson(const RankedPlan& plan, bool include_timing = false) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : plan.entries) entries.push_back(ToJson(e));
  nlohmann::json j{{"entries", entries},
                   {"candidates_enumerated", plan.candidates_enumerated},
                   {"candidates_pruned", plan.candidates_pruned},
                   {"structural_grid", plan.structural_grid}};
  if (include_timing) j["search_duration_s"] = plan.search_duration;
  return j;
}

inline RankedPlan PlanFromJson(const nlohmann::json& j) {
  RankedPlan plan;
  for (const auto& e : j.at("entries")) {
    PlanEntry entry;
    entry.strategy = StrategyFromJson(e.at("strategy"));
    entry.time = BreakdownFromJson(e.at("time"));
    entry.memory = MemoryFromJson(e.at("memory"));
    entry.bubble_regime_warning = e.at("bubble_regime_warning").get<bool>();
    plan.entries.push_back(entry);
  }
  plan.candidates_enumerated = j.at("candidates_enumerated").get<std::int64_t>();
  plan.candidates_pruned = j.at("candidates_pruned").get<std::int64_t>();
  plan.structural_grid = j.at("structural_grid").get<std::int64_t>();
  if (j.contains("search_duration_s")) plan.search_duration = j.at("search_duration_s").get<double>();
  return plan;
}

}  // namespace ptdplan
