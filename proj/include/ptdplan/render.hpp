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

// Human-readable and CSV renderings of plans, breakdowns and sweeps.

#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ptdplan/cost_model.hpp"
#include "ptdplan/memory_model.hpp"
#include "ptdplan/planner.hpp"

namespace ptdplan {

namespace detail {

inline std::string Fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string Gib(double bytes) { return Fmt("%.2f", bytes / (1024.0 * 1024.0 * 1024.0)); }

inline std::string PadLeft(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline void WriteAligned(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << "  ";
      os << PadLeft(row[i], width[i]);
    }
    os << '\n';
  }
}

}  // namespace detail

inline void RenderPlanTable(std::ostream& os, const RankedPlan& plan) {
  using detail::Fmt;
  std::vector<std::vector<std::string>> rows{
      {"rank", "(d,t,p,b)", "m", "T_total[s]", "samples/s", "T_F", "T_CT", "T_AT", "T_O",
       "T_CD", "T_AD", "T_B", "T_CP", "mem/NPU[GiB]", "note"}};
  int rank = 1;
  for (const auto& e : plan.entries) {
    const auto& t = e.time;
    rows.push_back({std::to_string(rank++), ToString(e.strategy), std::to_string(e.strategy.m),
                    Fmt("%.6g", t.T_total), Fmt("%.6g", t.throughput), Fmt("%.4g", t.T_F),
                    Fmt("%.4g", t.T_CT), Fmt("%.4g", t.T_AT), Fmt("%.4g", t.T_O),
                    Fmt("%.4g", t.T_CD), Fmt("%.4g", t.T_AD), Fmt("%.4g", t.T_B),
                    Fmt("%.4g", t.T_CP), detail::Gib(e.memory.per_npu_requirement),
                    e.bubble_regime_warning ? "m<p" : ""});
  }
  detail::WriteAligned(os, rows);
  os << "candidates evaluated: " << plan.candidates_enumerated
     << ", pruned: " << plan.candidates_pruned << " of " << plan.structural_grid
     << " structural (" << Fmt("%.1f", 100.0 * plan.pruned_fraction()) << "%)\n";
  for (const auto& e : plan.entries) {
    if (e.bubble_regime_warning) {
      os << "warning: " << ToString(e.strategy)
         << " has m < p; the bubble estimate is outside its m ≥ p regime\n";
    }
  }
}

inline void RenderPlanCsv(std::ostream& os, const RankedPlan& plan) {
  using detail::Fmt;
  os << "rank,d,t,p,b,m,G,T_total,throughput,T_F,T_CT,T_AT,T_O,T_CD,T_AD,T_B,T_CP,T_step,"
        "per_npu_bytes,m_lt_p\n";
  int rank = 1;
  for (const auto& e : plan.entries) {
    const auto& s = e.strategy;
    const auto& t = e.time;
    os << rank++ << ',' << s.d << ',' << s.t << ',' << s.p << ',' << s.b << ',' << s.m << ','
       << s.G;
    for (double v : {t.T_total, t.throughput, t.T_F, t.T_CT, t.T_AT, t.T_O, t.T_CD, t.T_AD,
                     t.T_B, t.T_CP, t.T_step, e.memory.per_npu_requirement}) {
      os << ',' << Fmt("%.17g", v);
    }
    os << ',' << (e.bubble_regime_warning ? 1 : 0) << '\n';
  }
}

inline void RenderBreakdownTable(std::ostream& os, const ParallelStrategy& s,
                                 const TimeBreakdown& t, const MemoryEstimate& mem) {
  using detail::Fmt;
  const auto& c = t.coefficients;
  os << "strategy (d,t,p,b) = " << ToString(s) << ", m = " << s.m << ", G = " << s.G << "\n";
  std::vector<std::vector<std::string>> rows{
      {"term", "seconds"},
      {"T_F", Fmt("%.9g", t.T_F)},     {"T_CT", Fmt("%.9g", t.T_CT)},
      {"T_AT", Fmt("%.9g", t.T_AT)},   {"T_O", Fmt("%.9g", t.T_O)},
      {"T_CD", Fmt("%.9g", t.T_CD)},   {"T_AD", Fmt("%.9g", t.T_AD)},
      {"T_B", Fmt("%.9g", t.T_B)},     {"T_CP", Fmt("%.9g", t.T_CP)},
      {"T_step", Fmt("%.9g", t.T_step)}, {"T_total", Fmt("%.9g", t.T_total)}};
  detail::WriteAligned(os, rows);
  os << "throughput: " << Fmt("%.9g", t.throughput) << " samples/s, rho = " << Fmt("%.6g", t.rho)
     << ", q = " << Fmt("%.6g", t.q) << "\n";
  os << "coefficients: eta1=" << Fmt("%.6g", c.eta1) << " eta2=" << Fmt("%.6g", c.eta2)
     << " lambda1=" << Fmt("%.6g", c.lambda1) << " lambda2=" << Fmt("%.6g", c.lambda2)
     << " gamma1=" << Fmt("%.6g", c.gamma1) << " gamma2=" << Fmt("%.6g", c.gamma2)
     << " alpha=" << Fmt("%.6g", c.alpha) << " beta=" << Fmt("%.6g", c.beta)
     << " phi1=" << Fmt("%.6g", c.phi1) << " phi2=" << Fmt("%.6g", c.phi2) << "\n";
  os << "memory: M_w=" << Fmt("%.6g", mem.M_w) << " M_o=" << Fmt("%.6g", mem.M_o)
     << " M_a=" << Fmt("%.6g", mem.M_a) << " M_m=" << Fmt("%.6g", mem.M_m)
     << " per_npu=" << Fmt("%.6g", mem.per_npu_requirement) << " bytes ("
     << detail::Gib(mem.per_npu_requirement) << " GiB)\n";
}

inline void RenderSweepCsv(std::ostream& os, const std::vector<SweepPoint>& points) {
  using detail::Fmt;
  os << "value,total_time,throughput,status\n";
  for (const auto& p : points) {
    os << p.value << ',';
    if (p.ok) {
      os << Fmt("%.17g", p.T_total) << ',' << Fmt("%.17g", p.throughput) << ','
         << (p.oom ? "oom" : "ok") << '\n';
    } else {
      os << ",," << p.error << '\n';
    }
  }
}

}  // namespace ptdplan
