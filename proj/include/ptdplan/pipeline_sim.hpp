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

// Discrete-event simulation of the 1F1B (PipeDream-Flush) schedule. Used as an
// oracle for the analytical bubble term; P2P latency is zero here because the
// cost model accounts for it separately.

#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "ptdplan/cost_model.hpp"
#include "ptdplan/error.hpp"

namespace ptdplan {

struct StageTiming {
  double forward = 1;   // seconds per micro batch per stage
  double backward = 2;  // seconds per micro batch per stage
  int p = 1;
  int m = 1;
  // Optional per-stage overrides (size p). Empty means uniform stages.
  std::vector<double> stage_forward;
  std::vector<double> stage_backward;

  double forward_at(int stage) const {
    return stage_forward.empty() ? forward : stage_forward[stage];
  }
  double backward_at(int stage) const {
    return stage_backward.empty() ? backward : stage_backward[stage];
  }
  bool uniform() const { return stage_forward.empty() && stage_backward.empty(); }
};

enum class PassKind { kForward, kBackward };

struct ScheduleEvent {
  PassKind kind = PassKind::kForward;
  int micro_batch = 0;
  double start = 0;
  double end = 0;

  bool operator==(const ScheduleEvent&) const = default;
};

struct ScheduleTrace {
  std::vector<std::vector<ScheduleEvent>> stages;  // per stage, time ordered
  std::vector<int> peak_in_flight;                  // per stage
  double makespan = 0;
  double bubble = 0;  // makespan - busy time of the busiest stage
};

namespace detail {

/// Per-stage op order: p - stage - 1 warm-up forwards, then alternating
/// forward/backward, then the cool-down backwards.
inline std::vector<std::pair<PassKind, int>> OneFOneBOrder(int stage, int p, int m) {
  std::vector<std::pair<PassKind, int>> order;
  order.reserve(2 * static_cast<size_t>(m));
  const int warmup = std::min(p - stage - 1, m);
  int next_f = 0;
  int next_b = 0;
  for (; next_f < warmup; ++next_f) order.emplace_back(PassKind::kForward, next_f);
  while (next_f < m) {
    order.emplace_back(PassKind::kForward, next_f++);
    order.emplace_back(PassKind::kBackward, next_b++);
  }
  while (next_b < m) order.emplace_back(PassKind::kBackward, next_b++);
  return order;
}

}  // namespace detail

inline void Validate(const StageTiming& timing) {
  if (timing.p < 1 || timing.m < 1) {
    throw Error(ErrorKind::kInvalidArgument, "stages and micro batches must be >= 1");
  }
  if (!(timing.forward > 0) || !(timing.backward > 0)) {
    throw Error(ErrorKind::kInvalidArgument, "forward and backward times must be > 0");
  }
  const auto p = static_cast<size_t>(timing.p);
  if ((!timing.stage_forward.empty() && timing.stage_forward.size() != p) ||
      (!timing.stage_backward.empty() && timing.stage_backward.size() != p)) {
    throw Error(ErrorKind::kInvalidArgument, "per-stage timings must have p entries");
  }
  for (double v : timing.stage_forward) {
    if (!(v > 0)) throw Error(ErrorKind::kInvalidArgument, "stage forward must be > 0");
  }
  for (double v : timing.stage_backward) {
    if (!(v > 0)) throw Error(ErrorKind::kInvalidArgument, "stage backward must be > 0");
  }
}

/// Each op starts as soon as its stage is free and its dependency has
/// finished: F(j, i) after F(j-1, i); B(j, i) after B(j+1, i), or after
/// F(j, i) on the last stage.
inline ScheduleTrace Simulate1F1B(const StageTiming& timing) {
  Validate(timing);
  const int p = timing.p;
  const int m = timing.m;
  constexpr double kPending = -1.0;

  std::vector<std::vector<std::pair<PassKind, int>>> orders;
  orders.reserve(p);
  for (int j = 0; j < p; ++j) orders.push_back(detail::OneFOneBOrder(j, p, m));

  std::vector<std::vector<double>> f_end(p, std::vector<double>(m, kPending));
  std::vector<std::vector<double>> b_end(p, std::vector<double>(m, kPending));
  std::vector<size_t> cursor(p, 0);
  std::vector<double> free_at(p, 0.0);
  std::vector<int> in_flight(p, 0);

  ScheduleTrace trace;
  trace.stages.assign(p, {});
  trace.peak_in_flight.assign(p, 0);

  size_t remaining = static_cast<size_t>(2) * p * m;
  while (remaining > 0) {
    bool progressed = false;
    for (int j = 0; j < p; ++j) {
      while (cursor[j] < orders[j].size()) {
        const auto [kind, i] = orders[j][cursor[j]];
        double ready = 0;
        if (kind == PassKind::kForward) {
          if (j > 0) {
            if (f_end[j - 1][i] == kPending) break;
            ready = f_end[j - 1][i];
          }
        } else {
          const double dep = j + 1 < p ? b_end[j + 1][i] : f_end[j][i];
          if (dep == kPending) break;
          ready = dep;
        }
        const double start = std::max(free_at[j], ready);
        const double dur =
            kind == PassKind::kForward ? timing.forward_at(j) : timing.backward_at(j);
        const double end = start + dur;
        (kind == PassKind::kForward ? f_end : b_end)[j][i] = end;
        free_at[j] = end;
        trace.stages[j].push_back({kind, i, start, end});
        in_flight[j] += kind == PassKind::kForward ? 1 : -1;
        trace.peak_in_flight[j] = std::max(trace.peak_in_flight[j], in_flight[j]);
        ++cursor[j];
        --remaining;
        progressed = true;
      }
    }
    if (!progressed) {
      throw Error(ErrorKind::kInvalidArgument, "1F1B schedule deadlocked");
    }
  }

  double busiest = 0;
  for (int j = 0; j < p; ++j) {
    trace.makespan = std::max(trace.makespan, free_at[j]);
    busiest = std::max(busiest, m * (timing.forward_at(j) + timing.backward_at(j)));
  }
  trace.bubble = trace.makespan - busiest;
  return trace;
}

struct BubbleComparison {
  double simulated = 0;
  double closed_form = 0;
  double relative_error = 0;
  bool in_regime = true;  // m >= p, where the closed form is exact
};

/// Compares the simulated bubble against the analytical one, feeding the
/// per-step compute m (f + w) into the cost model's bubble term.
inline BubbleComparison CompareBubble(const StageTiming& timing) {
  const auto trace = Simulate1F1B(timing);
  BubbleComparison out;
  out.simulated = trace.bubble;
  out.closed_form =
      BubbleTime(timing.m * (timing.forward + timing.backward), 0.0, 0.0, 0.0, timing.p, timing.m);
  // A zero closed form (p = 1) is compared against the makespan instead, so
  // rounding residue in the simulated bubble does not read as a 100% error.
  const double scale = out.closed_form > 0 ? out.closed_form : trace.makespan;
  out.relative_error = std::abs(out.simulated - out.closed_form) / scale;
  out.in_regime = timing.m >= timing.p;
  return out;
}

/// Trace as `stage,kind,micro_id,start,end`.
inline void WriteTraceCsv(std::ostream& os, const ScheduleTrace& trace) {
  const auto precision = os.precision(15);
  os << "stage,kind,micro_id,start,end\n";
  for (size_t j = 0; j < trace.stages.size(); ++j) {
    for (const auto& e : trace.stages[j]) {
      os << j << ',' << (e.kind == PassKind::kForward ? 'F' : 'B') << ',' << e.micro_batch << ','
         << e.start << ',' << e.end << '\n';
    }
  }
  os.precision(precision);
}

}  // namespace ptdplan
