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

// Analytical step-time model for 3D-parallel transformer training.
//
// A training step is decomposed into
//
//   T_step = T_F + T_CT + T_AT - T_O + T_CD + T_AD + T_B + T_CP
//
// and the run takes T_total = T_step * S_t / G. Every term models the last
// pipeline stage, the one that also owns the vocabulary projection, since all
// other stages wait on it.

#pragma once

#include <algorithm>
#include <optional>

#include "json.hpp"
#include "ptdplan/calibration.hpp"
#include "ptdplan/config.hpp"
#include "ptdplan/error.hpp"

namespace ptdplan {

struct CostOptions {
  /// Fraction of the per-layer TP all-reduce time that happens in the backward
  /// pass and can hide behind weight-gradient compute. Unset means k / (1 + k).
  std::optional<double> overlap_backward_share;

  double backward_share(const ModelConfig& model) const {
    return overlap_backward_share.value_or(model.k / (1.0 + model.k));
  }
};

struct CoefficientSet {
  double eta1 = 0, eta2 = 0;        // s / sample
  double lambda1 = 0, lambda2 = 0;  // s
  double gamma1 = 0, gamma2 = 0;    // s
  double alpha = 0, beta = 0;       // s
  double phi1 = 0, phi2 = 0;        // s / sample, s

  bool operator==(const CoefficientSet&) const = default;
};

struct TimeBreakdown {
  double T_F = 0;
  double T_CT = 0;
  double T_AT = 0;
  double T_CD = 0;
  double T_AD = 0;
  double T_CP = 0;
  double T_B = 0;
  double T_O = 0;
  double T_step = 0;
  double T_total = 0;
  double throughput = 0;  // samples / s
  double rho = 1;
  double q = 1;
  CoefficientSet coefficients;

  bool operator==(const TimeBreakdown&) const = default;
};

// ---------------------------------------------------------------------------
// Coefficients

inline double Eta1(const HardwareConfig& hw, const ModelConfig& m) {
  const double s = m.s, h = m.h, H = m.H;
  return 2.0 * (1.0 + m.k) * m.L * (4 * s * h * h + 2 * s * s * h + 2 * s * h * H) /
         (hw.n * hw.U_max);
}

inline double Eta2(const HardwareConfig& hw, const ModelConfig& m) {
  return 2.0 * (1.0 + m.k) * static_cast<double>(m.s) * m.h * m.V / (hw.n * hw.U_max);
}

/// Parameter bytes of the transformer layers (vocabulary excluded).
inline double LayerParameterBytes(const ModelConfig& m) {
  const double h = m.h, H = m.H;
  return m.L * (4 * h * h + 2 * h * H + 9 * h + H) * m.u;
}

inline double Lambda1(const HardwareConfig& hw, const ModelConfig& m) {
  return 2.0 * LayerParameterBytes(m) / hw.g;
}

inline double Lambda2(const HardwareConfig& hw, const ModelConfig& m) {
  return 2.0 * static_cast<double>(m.V) * m.h * m.u / hw.g;
}

inline double Gamma1(const HardwareConfig& hw, const ModelConfig& m, int G, double q) {
  return 8.0 * m.L * static_cast<double>(m.s) * m.h * m.u * G / (q * hw.g2 * hw.n);
}

inline double Gamma2(const HardwareConfig& hw, const ModelConfig& m, int G, double q) {
  return static_cast<double>(m.s) * m.h * m.u * G / (q * hw.g2 * hw.n);
}

inline double Alpha(const HardwareConfig& hw, const ModelConfig& m, int G) {
  return static_cast<double>(m.s) * m.h * m.u * G / (hw.g * hw.n);
}

inline double Beta(const HardwareConfig& hw, const ModelConfig& m) {
  return static_cast<double>(m.s) * m.h * m.u / hw.g;
}

// ---------------------------------------------------------------------------
// Individual terms

inline double ComputeTime(const HardwareConfig& hw, const ModelConfig& model,
                          const CalibrationTable& calib, const ParallelStrategy& s) {
  const double rho = calib.rho(s.b, model.s, model.h, s.t);
  return (Eta1(hw, model) + Eta2(hw, model) * s.p) * s.G * rho;
}

inline double TpCommTime(const HardwareConfig& hw, const ModelConfig& model,
                         const CalibrationTable& calib, const ParallelStrategy& s) {
  if (s.t == 1) return 0.0;
  const double q = calib.slowdown_q(s.t);
  return Gamma1(hw, model, s.G, q) + Gamma2(hw, model, s.G, q) * s.p;
}

/// Ring all-reduce of gradients across data-parallel replicas.
inline double DpCommTime(const HardwareConfig& hw, const ModelConfig& model,
                         const ParallelStrategy& s) {
  const double n = hw.n, p = s.p, t = s.t;
  const double layer_factor = std::max(0.0, 1.0 / (p * t) - 1.0 / n);
  const double vocab_factor = std::max(0.0, 1.0 / t - p / n);
  return Lambda1(hw, model) * layer_factor + Lambda2(hw, model) * vocab_factor;
}

/// Point-to-point activation transfers between pipeline stages.
inline double PpCommTime(const HardwareConfig& hw, const ModelConfig& model,
                         const ParallelStrategy& s) {
  if (s.p == 1) return 0.0;
  const double alpha = Alpha(hw, model, s.G);
  const double beta = Beta(hw, model);
  return alpha * s.p * s.t + 2.0 * beta * s.p * s.b - 3.0 * beta * s.b;
}

/// The two operands of the per-sublayer overlap minimum, for one layer.
struct SublayerOverlap {
  double backward_comm = 0;  // backward TP all-reduce of one sublayer
  double mha_weight_grad = 0;
  double mlp_weight_grad = 0;
};

inline SublayerOverlap OverlapOperands(const HardwareConfig& hw, const ModelConfig& model,
                                       const CalibrationTable& calib,
                                       const ParallelStrategy& s,
                                       const CostOptions& opts = {}) {
  SublayerOverlap out;
  if (s.t == 1) return out;
  const double q = calib.slowdown_q(s.t);
  const double rho = calib.rho(s.b, model.s, model.h, s.t);
  // gamma1 covers MHA and MLP of all L layers.
  out.backward_comm = opts.backward_share(model) * Gamma1(hw, model, s.G, q) / (2.0 * model.L);
  const double scale = model.u * static_cast<double>(model.s) * model.h * s.G * rho /
                       (hw.n * hw.U_max);
  out.mha_weight_grad = 3.0 * model.h * scale;
  out.mlp_weight_grad = static_cast<double>(model.H) * scale;
  return out;
}

/// TP communication hidden behind backward weight-gradient compute, summed
/// over layers and the MHA/MLP sublayers.
inline double OverlapTime(const HardwareConfig& hw, const ModelConfig& model,
                          const CalibrationTable& calib, const ParallelStrategy& s,
                          const CostOptions& opts = {}) {
  if (s.t == 1) return 0.0;
  const auto ops = OverlapOperands(hw, model, calib, s, opts);
  const double per_layer = std::min(ops.backward_comm, ops.mha_weight_grad) +
                           std::min(ops.backward_comm, ops.mlp_weight_grad);
  const double t_ct = TpCommTime(hw, model, calib, s);
  const double t_at = hw.ar_compute_coeff_tp * t_ct;
  return std::min(model.L * per_layer, t_ct + t_at);
}

struct AllReduceCompute {
  double T_AT = 0;
  double T_AD = 0;
};

inline AllReduceCompute AllReduceComputeTimes(const HardwareConfig& hw, double t_ct,
                                              double t_cd) {
  return {hw.ar_compute_coeff_tp * t_ct, hw.ar_compute_coeff_dp * t_cd};
}

/// 1F1B pipeline bubble: the busy part of the last stage stretched by (p-1)/m.
inline double BubbleTime(double t_f, double t_ct, double t_at, double t_o, int p, int m) {
  if (p == 1) return 0.0;
  return (t_f + t_ct + t_at - t_o) * (p - 1) / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Assembly

inline TimeBreakdown TotalBreakdown(const HardwareConfig& hw, const ModelConfig& model,
                                    const CalibrationTable& calib,
                                    const ParallelStrategy& s, const CostOptions& opts = {}) {
  if (s.G < 1 || s.m < 1 || s.b < 1 || s.p < 1 || s.t < 1 || s.d < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "strategy " + ToString(s) + " is not structurally valid");
  }
  TimeBreakdown out;
  out.rho = calib.rho(s.b, model.s, model.h, s.t);
  out.q = s.t > 1 ? calib.slowdown_q(s.t) : 1.0;

  auto& c = out.coefficients;
  c.eta1 = Eta1(hw, model);
  c.eta2 = Eta2(hw, model);
  c.lambda1 = Lambda1(hw, model);
  c.lambda2 = Lambda2(hw, model);
  c.gamma1 = Gamma1(hw, model, s.G, out.q);
  c.gamma2 = Gamma2(hw, model, s.G, out.q);
  c.alpha = Alpha(hw, model, s.G);
  c.beta = Beta(hw, model);

  out.T_F = ComputeTime(hw, model, calib, s);
  out.T_CT = TpCommTime(hw, model, calib, s);
  out.T_CD = DpCommTime(hw, model, s);
  out.T_CP = PpCommTime(hw, model, s);
  const auto ar = AllReduceComputeTimes(hw, out.T_CT, out.T_CD);
  out.T_AT = ar.T_AT;
  out.T_AD = ar.T_AD;
  out.T_O = OverlapTime(hw, model, calib, s, opts);
  out.T_B = BubbleTime(out.T_F, out.T_CT, out.T_AT, out.T_O, s.p, s.m);

  out.T_step = out.T_F + out.T_CT + out.T_AT - out.T_O + out.T_CD + out.T_AD + out.T_B +
               out.T_CP;
  out.T_total = out.T_step * static_cast<double>(model.S_t) / s.G;
  out.throughput = static_cast<double>(model.S_t) / out.T_total;

  // Split into the part that scales with G (per sample) and the part that
  // does not. The bubble is G-independent because m = G / (b d).
  const double p2p_per_sample = s.p > 1 ? c.alpha * s.p * s.t : 0.0;
  const double p2p_fixed = s.p > 1 ? c.beta * s.b * (2.0 * s.p - 3.0) : 0.0;
  c.phi1 = (out.T_F + out.T_CT + out.T_AT - out.T_O + p2p_per_sample) / s.G;
  c.phi2 = out.T_CD + out.T_AD + out.T_B + p2p_fixed;
  return out;
}

struct GDecomposition {
  double phi1 = 0;  // s / sample
  double phi2 = 0;  // s

  double total(int G, double samples) const { return (phi1 + phi2 / G) * samples; }
};

/// Rearranges T_total as (phi1 + phi2 / G) * S_t at fixed (d, t, p, b).
inline GDecomposition DecomposeByGlobalBatch(const HardwareConfig& hw,
                                             const ModelConfig& model,
                                             const CalibrationTable& calib,
                                             const ParallelStrategy& s,
                                             const CostOptions& opts = {}) {
  const auto bd = TotalBreakdown(hw, model, calib, s, opts);
  return {bd.coefficients.phi1, bd.coefficients.phi2};
}

/// Forward difference of T_total in b at fixed (d, t, p, G).
inline double MicroBatchSensitivity(const HardwareConfig& hw, const ModelConfig& model,
                                    const CalibrationTable& calib, const ParallelStrategy& s,
                                    int delta_b, const CostOptions& opts = {}) {
  if (delta_b <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "delta_b must be positive");
  }
  const auto lo = MakeStrategy(s.d, s.t, s.p, s.b, s.G);
  const auto hi = MakeStrategy(s.d, s.t, s.p, s.b + delta_b, s.G);
  if (lo.m == 0 || hi.m == 0) {
    throw Error(ErrorKind::kIndivisibleMicroBatch,
                "b=" + std::to_string(lo.m == 0 ? s.b : s.b + delta_b) + " with d=" +
                    std::to_string(s.d) + " does not divide G=" + std::to_string(s.G));
  }
  const double t_lo = TotalBreakdown(hw, model, calib, lo, opts).T_total;
  const double t_hi = TotalBreakdown(hw, model, calib, hi, opts).T_total;
  return (t_hi - t_lo) / delta_b;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json ToJson(const CoefficientSet& c) {
  return {{"eta1", c.eta1},       {"eta2", c.eta2},   {"lambda1", c.lambda1},
          {"lambda2", c.lambda2}, {"gamma1", c.gamma1}, {"gamma2", c.gamma2},
          {"alpha", c.alpha},     {"beta", c.beta},   {"phi1", c.phi1},
          {"phi2", c.phi2}};
}

inline CoefficientSet CoefficientsFromJson(const nlohmann::json& j) {
  CoefficientSet c;
  c.eta1 = j.at("eta1").get<double>();
  c.eta2 = j.at("eta2").get<double>();
  c.lambda1 = j.at("lambda1").get<double>();
  c.lambda2 = j.at("lambda2").get<double>();
  c.gamma1 = j.at("gamma1").get<double>();
  c.gamma2 = j.at("gamma2").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.phi1 = j.at("phi1").get<double>();
  c.phi2 = j.at("phi2").get<double>();
  return c;
}

inline nlohmann::json ToJson(const TimeBreakdown& b) {
  return {{"T_F", b.T_F},
          {"T_CT", b.T_CT},
          {"T_AT", b.T_AT},
          {"T_CD", b.T_CD},
          {"T_AD", b.T_AD},
          {"T_CP", b.T_CP},
          {"T_B", b.T_B},
          {"T_O", b.T_O},
          {"T_step", b.T_step},
          {"T_total", b.T_total},
          {"throughput", b.throughput},
          {"rho", b.rho},
          {"q", b.q},
          {"coefficients", ToJson(b.coefficients)}};
}

inline TimeBreakdown BreakdownFromJson(const nlohmann::json& j) {
  TimeBreakdown b;
  b.T_F = j.at("T_F").get<double>();
  b.T_CT = j.at("T_CT").get<double>();
  b.T_AT = j.at("T_AT").get<double>();
  b.T_CD = j.at("T_CD").get<double>();
  b.T_AD = j.at("T_AD").get<double>();
  b.T_CP = j.at("T_CP").get<double>();
  b.T_B = j.at("T_B").get<double>();
  b.T_O = j.at("T_O").get<double>();
  b.T_step = j.at("T_step").get<double>();
  b.T_total = j.at("T_total").get<double>();
  b.throughput = j.at("throughput").get<double>();
  b.rho = j.at("rho").get<double>();
  b.q = j.at("q").get<double>();
  b.coefficients = CoefficientsFromJson(j.at("coefficients"));
  return b;
}

}  // namespace ptdplan
