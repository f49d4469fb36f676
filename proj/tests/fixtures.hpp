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

// In-code fixtures shared by the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <vector>

#include "ptdplan.hpp"

namespace ptdplan::testing {

/// The small hand-checkable model used for closed-form golden values.
inline ModelConfig ToyModel() {
  ModelConfig m;
  m.L = 2;
  m.s = 4;
  m.h = 4;
  m.H = 8;
  m.V = 16;
  m.a = 2;
  m.u = 2;
  m.k = 2;
  m.S_t = 1024;
  return m;
}

inline HardwareConfig ToyHardware(int n) {
  HardwareConfig hw;
  hw.n = n;
  hw.U_max = 1e12;
  hw.g = 1e9;
  hw.g2 = 1e9;
  hw.M_NPU = 1e18;
  hw.npus_per_server = 8;
  return hw;
}

/// rho(b) = 1 + c / b on b = 1, 2, 4, ..., 32, in a single (s, h, t) group so
/// every query resolves to it.
inline CalibrationSamples SyntheticRhoSamples(double c, int s = 4, int h = 4) {
  CalibrationSamples out;
  for (int b = 1; b <= 32; b *= 2) out.rho.push_back({b, s, h, 1, 1.0 + c / b});
  return out;
}

inline CalibrationTable Calibration(double rho_c, std::vector<QSample> q = {{2, 0.8}, {8, 0.8}},
                                    int s = 4, int h = 4) {
  auto samples = SyntheticRhoSamples(rho_c, s, h);
  samples.q = std::move(q);
  return CalibrationTable::FromSamples(samples);
}

/// rho fixed at `rho` for every b.
inline CalibrationTable FlatCalibration(double rho, std::vector<QSample> q = {{2, 0.8}, {8, 0.8}}) {
  CalibrationSamples samples;
  samples.rho.push_back({1, 4, 4, 1, rho});
  samples.q = std::move(q);
  return CalibrationTable::FromSamples(samples);
}

/// A mid-sized model where memory actually binds at small n.
inline ModelConfig SmallGpt() {
  ModelConfig m;
  m.L = 16;
  m.s = 512;
  m.h = 1024;
  m.H = 4096;
  m.V = 32000;
  m.a = 16;
  m.u = 2;
  m.k = 2;
  m.S_t = 1 << 20;
  return m;
}

inline HardwareConfig SmallCluster(int n, double memory_bytes) {
  HardwareConfig hw;
  hw.n = n;
  hw.U_max = 1.0e14;
  hw.g = 1.25e10;
  hw.g2 = 5.0e10;
  hw.M_NPU = memory_bytes;
  hw.npus_per_server = 8;
  hw.ar_compute_coeff_tp = 0.05;
  hw.ar_compute_coeff_dp = 0.05;
  return hw;
}

/// Independent oracle: every structurally valid, memory-feasible
/// (d, t, p, b), scored directly and sorted by the documented order.
inline std::vector<PlanEntry> BruteForce(const PlanRequest& req) {
  const auto& hw = req.hardware;
  const auto model = req.effective_model();
  std::vector<PlanEntry> out;
  for (int d = 1; d <= hw.n; ++d) {
    for (int t = 1; t <= hw.n; ++t) {
      for (int p = 1; p <= hw.n; ++p) {
        if (d * t * p != hw.n || (t & (t - 1)) != 0) continue;
        for (int b = 1; b <= req.b_ceiling; b *= 2) {
          const auto s = MakeStrategy(d, t, p, b, req.G);
          if (!ValidateStrategy(s, hw, model).ok() || IsOom(hw, model, s)) continue;
          PlanEntry e;
          e.strategy = s;
          e.time = TotalBreakdown(hw, model, req.calibration, s, req.cost);
          e.memory = EstimateMemory(model, s);
          e.bubble_regime_warning = s.m < s.p;
          out.push_back(e);
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PlanEntry& x, const PlanEntry& y) {
    if (x.time.T_total != y.time.T_total) return x.time.T_total < y.time.T_total;
    if (x.strategy.t != y.strategy.t) return x.strategy.t > y.strategy.t;
    if (x.strategy.p != y.strategy.p) return x.strategy.p < y.strategy.p;
    return x.strategy.b < y.strategy.b;
  });
  return out;
}

}  // namespace ptdplan::testing
