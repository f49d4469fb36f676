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

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "json.hpp"
#include "ptdplan/config.hpp"
#include "ptdplan/cost_model.hpp"
#include "ptdplan/error.hpp"

namespace ptdplan {

inline constexpr int kDefaultMicroBatchCeiling = 1024;

struct MemoryEstimate {
  double M_w = 0;  // weights
  double M_o = 0;  // optimizer states
  double M_a = 0;  // activations held at the 1F1B peak
  double M_m = 0;  // M_w + M_o + M_a
  double per_npu_requirement = 0;

  bool operator==(const MemoryEstimate&) const = default;
};

namespace detail {

// Per-NPU memory splits into three parts:
//   activation floor, replicated on every TP rank:        2 L s b (h + H)
//   TP-sharded activations plus the vocabulary weights:   [L s b (16h + 2H + 5sa) + V h u] / t
//   layer weights and optimizer states, sharded by p t:   10 u L (4h^2 + 2hH + 9h + H) / (p t)
// With 1F1B a stage holds p micro batches of L/p layers, so p cancels in the
// activation terms.

inline double ActivationFloor(const ModelConfig& m, int b) {
  return 2.0 * m.L * static_cast<double>(m.s) * b * (static_cast<double>(m.h) + m.H);
}

inline double TpShardedBytes(const ModelConfig& m, int b) {
  const double s = m.s, h = m.h, H = m.H, a = m.a;
  return m.L * s * b * (16 * h + 2 * H + 5 * s * a) + static_cast<double>(m.V) * h * m.u;
}

inline double PtShardedBytes(const ModelConfig& m) { return 10.0 * LayerParameterBytes(m); }

}  // namespace detail

inline MemoryEstimate EstimateMemory(const ModelConfig& model, const ParallelStrategy& s) {
  MemoryEstimate e;
  const double h = model.h, H = model.H, sq = model.s, a = model.a;
  e.M_w = LayerParameterBytes(model) + static_cast<double>(model.V) * h * model.u;
  e.M_o = 9.0 * e.M_w;
  e.M_a = model.L * sq * s.b * s.p * (18 * h + 4 * H + 5 * sq * a);
  e.M_m = e.M_w + e.M_o + e.M_a;
  e.per_npu_requirement = detail::ActivationFloor(model, s.b) +
                          detail::TpShardedBytes(model, s.b) / s.t +
                          detail::PtShardedBytes(model) / (static_cast<double>(s.p) * s.t);
  return e;
}

/// A requirement equal to the usable capacity still fits.
inline bool IsOom(const HardwareConfig& hw, const ModelConfig& model,
                  const ParallelStrategy& s) {
  return EstimateMemory(model, s).per_npu_requirement > hw.usable_memory();
}

/// Memory-derived limits on (t, p, b) at a fixed micro batch size.
class BoundSet {
 public:
  BoundSet(const HardwareConfig& hw, const ModelConfig& model, int b,
           int b_ceiling = kDefaultMicroBatchCeiling)
      : hw_(hw), model_(model), b_(b), b_ceiling_(b_ceiling) {
    m1 = hw.usable_memory() - detail::ActivationFloor(model, b);
    m2 = detail::TpShardedBytes(model, b);
    m3 = detail::PtShardedBytes(model);
    if (m1 > 0 && m2 / m1 < std::numeric_limits<int>::max()) {
      t_min = std::max(1, static_cast<int>(std::ceil(m2 / m1)));
    } else {
      t_min = std::numeric_limits<int>::max();
    }
  }

  double m1 = 0;
  double m2 = 0;
  double m3 = 0;
  int t_min = 1;
  std::map<int, int> b_max_at_hint;  // t -> b_max(p_hint, t), filled on request

  int micro_batch() const { return b_; }
  bool feasible() const { return m1 > 0; }

  /// Smallest p that fits at degree t, or nullopt when no p does.
  std::optional<int> p_min(int t) const {
    const double denom = m1 * t - m2;
    if (!(m1 > 0) || !(denom > 0)) return std::nullopt;
    const double p = std::ceil(m3 / denom);
    if (p >= std::numeric_limits<int>::max()) return std::nullopt;
    return std::max(1, static_cast<int>(p));
  }

  bool admits(int p, int t) const {
    const auto pm = p_min(t);
    return t >= t_min && pm.has_value() && p >= *pm;
  }

  /// Largest power-of-two micro batch that fits at (p, t), up to the ceiling;
  /// 0 when even b = 1 does not fit.
  int b_max(int p, int t) const {
    int best = 0;
    for (int b = 1; b <= b_ceiling_; b *= 2) {
      if (!BoundSet(hw_, model_, b, b_ceiling_).admits(p, t)) break;
      best = b;
    }
    return best;
  }

 private:
  HardwareConfig hw_;
  ModelConfig model_;
  int b_ = 1;
  int b_ceiling_ = kDefaultMicroBatchCeiling;
};

/// Throws Infeasible when the replicated activation floor alone exceeds the
/// device at b = 1: no degree of parallelism can fit the model.
inline BoundSet FeasibilityBounds(const HardwareConfig& hw, const ModelConfig& model, int b,
                                  std::optional<int> p_hint = std::nullopt,
                                  int b_ceiling = kDefaultMicroBatchCeiling) {
  BoundSet bounds(hw, model, b, b_ceiling);
  if (b == 1 && !bounds.feasible()) {
    throw Error(ErrorKind::kInfeasible,
                "unsharded activations at b=1 exceed per-NPU memory (m1 <= 0)");
  }
  if (p_hint) {
    for (int t = 1; t <= hw.npus_per_server; t *= 2) {
      bounds.b_max_at_hint[t] = bounds.b_max(*p_hint, t);
    }
  }
  return bounds;
}

inline nlohmann::json ToJson(const MemoryEstimate& e) {
  return {{"M_w", e.M_w},
          {"M_o", e.M_o},
          {"M_a", e.M_a},
          {"M_m", e.M_m},
          {"per_npu_requirement", e.per_npu_requirement}};
}

inline MemoryEstimate MemoryFromJson(const nlohmann::json& j) {
  MemoryEstimate e;
  e.M_w = j.at("M_w").get<double>();
  e.M_o = j.at("M_o").get<double>();
  e.M_a = j.at("M_a").get<double>();
  e.M_m = j.at("M_m").get<double>();
  e.per_npu_requirement = j.at("per_npu_requirement").get<double>();
  return e;
}

}  // namespace ptdplan
