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

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ptdplan/error.hpp"

namespace ptdplan {

using json = nlohmann::json;

// Units at the boundary: bytes, seconds, FLOPs. Everything internal is double.

struct HardwareConfig {
  int n = 1;                       // NPU count
  double U_max = 0;                // peak FLOP/s per NPU
  double g = 0;                    // inter-server bandwidth, bytes/s
  double g2 = 0;                   // intra-server bandwidth, bytes/s
  double M_NPU = 0;                // memory per NPU, bytes
  int npus_per_server = 8;         // upper bound on t
  double ar_compute_coeff_tp = 0;  // T_AT / T_CT
  double ar_compute_coeff_dp = 0;  // T_AD / T_CD
  double memory_headroom = 0;      // fraction of M_NPU kept free, [0, 1)

  double usable_memory() const { return M_NPU * (1.0 - memory_headroom); }

  bool operator==(const HardwareConfig&) const = default;
};

struct ModelConfig {
  int s = 1;        // sequence length
  int h = 1;        // hidden size
  int a = 1;        // attention heads
  int H = 1;        // feed-forward hidden size
  int L = 1;        // layers
  int V = 1;        // vocabulary
  double u = 2;     // bytes per parameter
  std::int64_t S_t = 1;  // total training samples
  double k = 2;     // backward / forward FLOP ratio

  bool operator==(const ModelConfig&) const = default;
};

struct ParallelStrategy {
  int d = 1;
  int t = 1;
  int p = 1;
  int b = 1;
  int m = 1;
  int G = 1;
  std::optional<int> B;  // mini batch size; carried through, never used

  bool operator==(const ParallelStrategy&) const = default;
};

/// Builds a strategy from (d, t, p, b, G), deriving m = G / (b d). When b d
/// does not divide G the result carries m = 0, which validation rejects.
inline ParallelStrategy MakeStrategy(int d, int t, int p, int b, int G) {
  ParallelStrategy s{d, t, p, b, 0, G, std::nullopt};
  const long long bd = static_cast<long long>(b) * d;
  if (bd > 0 && G % bd == 0) s.m = static_cast<int>(G / bd);
  return s;
}

inline std::string ToString(const ParallelStrategy& s) {
  std::ostringstream os;
  os << "(" << s.d << "," << s.t << "," << s.p << "," << s.b << ")";
  return os.str();
}

namespace detail {

inline void RejectUnknownFields(const json& doc,
                                std::initializer_list<std::string_view> known,
                                std::string_view what) {
  if (!doc.is_object()) {
    throw Error(ErrorKind::kMalformedDocument,
                std::string(what) + " document must be a JSON object");
  }
  const std::set<std::string_view> allowed(known);
  for (const auto& item : doc.items()) {
    if (!allowed.contains(item.key())) {
      throw Error(ErrorKind::kMalformedDocument,
                  "unknown field '" + item.key() + "' in " + std::string(what));
    }
  }
}

inline const json* Find(const json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() ? nullptr : &*it;
}

inline double RequireNumber(const json& doc, const char* key) {
  const json* v = Find(doc, key);
  if (v == nullptr) throw Error(ErrorKind::kMissingField, key);
  if (!v->is_number()) {
    throw Error(ErrorKind::kInvalidValue,
                std::string(key) + " must be a number");
  }
  return v->get<double>();
}

inline double OptionalNumber(const json& doc, const char* key, double fallback) {
  return Find(doc, key) ? RequireNumber(doc, key) : fallback;
}

inline std::int64_t RequireInteger(const json& doc, const char* key) {
  const double value = RequireNumber(doc, key);
  if (!std::isfinite(value) || std::floor(value) != value) {
    throw Error(ErrorKind::kInvalidValue,
                std::string(key) + " must be an integer");
  }
  return static_cast<std::int64_t>(value);
}

inline void Check(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kInvalidValue, message);
}

inline json ParseDocument(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
}

}  // namespace detail

/// Throws InvalidValue naming the first violated invariant.
inline void Validate(const HardwareConfig& hw) {
  using detail::Check;
  Check(hw.n >= 1, "n must be ≥ 1");
  Check(hw.U_max > 0, "U_max must be > 0");
  Check(hw.g > 0, "g must be > 0");
  Check(hw.g2 > 0, "g2 must be > 0");
  Check(hw.M_NPU > 0, "M_NPU must be > 0");
  Check(hw.npus_per_server >= 1, "npus_per_server must be ≥ 1");
  Check(hw.n <= hw.npus_per_server || hw.n % hw.npus_per_server == 0,
        "npus_per_server must divide n when n > npus_per_server");
  Check(hw.ar_compute_coeff_tp >= 0 && hw.ar_compute_coeff_tp <= 1,
        "ar_compute_coeff_tp must lie in [0, 1]");
  Check(hw.ar_compute_coeff_dp >= 0 && hw.ar_compute_coeff_dp <= 1,
        "ar_compute_coeff_dp must lie in [0, 1]");
  Check(hw.memory_headroom >= 0 && hw.memory_headroom < 1,
        "memory_headroom must lie in [0, 1)");
}

inline void Validate(const ModelConfig& m) {
  using detail::Check;
  Check(m.s >= 1, "s must be ≥ 1");
  Check(m.h >= 1, "h must be ≥ 1");
  Check(m.a >= 1, "a must be ≥ 1");
  Check(m.H >= 1, "H must be ≥ 1");
  Check(m.L >= 1, "L must be ≥ 1");
  Check(m.V >= 1, "V must be ≥ 1");
  Check(m.u > 0, "u must be > 0");
  Check(m.S_t >= 1, "S_t must be ≥ 1");
  Check(m.k > 0, "k must be > 0");
  Check(m.h % m.a == 0, "h must be divisible by a");
}

inline HardwareConfig HardwareFromJson(const json& doc) {
  using namespace detail;
  RejectUnknownFields(doc,
                      {"n", "U_max", "g", "g2", "M_NPU", "npus_per_server",
                       "ar_compute_coeff_tp", "ar_compute_coeff_dp",
                       "memory_headroom"},
                      "hardware");
  HardwareConfig hw;
  hw.n = static_cast<int>(RequireInteger(doc, "n"));
  hw.U_max = RequireNumber(doc, "U_max");
  hw.g = RequireNumber(doc, "g");
  hw.g2 = RequireNumber(doc, "g2");
  hw.M_NPU = RequireNumber(doc, "M_NPU");
  hw.npus_per_server = static_cast<int>(
      Find(doc, "npus_per_server") ? RequireInteger(doc, "npus_per_server") : 8);
  hw.ar_compute_coeff_tp = OptionalNumber(doc, "ar_compute_coeff_tp", 0.0);
  hw.ar_compute_coeff_dp = OptionalNumber(doc, "ar_compute_coeff_dp", 0.0);
  hw.memory_headroom = OptionalNumber(doc, "memory_headroom", 0.0);
  Validate(hw);
  return hw;
}

inline ModelConfig ModelFromJson(const json& doc) {
  using namespace detail;
  RejectUnknownFields(doc, {"s", "h", "a", "H", "L", "V", "u", "S_t", "k"},
                      "model");
  ModelConfig m;
  m.s = static_cast<int>(RequireInteger(doc, "s"));
  m.h = static_cast<int>(RequireInteger(doc, "h"));
  m.a = static_cast<int>(RequireInteger(doc, "a"));
  m.H = static_cast<int>(RequireInteger(doc, "H"));
  m.L = static_cast<int>(RequireInteger(doc, "L"));
  m.V = static_cast<int>(RequireInteger(doc, "V"));
  m.u = RequireNumber(doc, "u");
  m.S_t = RequireInteger(doc, "S_t");
  m.k = OptionalNumber(doc, "k", 2.0);
  Validate(m);
  return m;
}

inline json ToJson(const HardwareConfig& hw) {
  return json{{"n", hw.n},
              {"U_max", hw.U_max},
              {"g", hw.g},
              {"g2", hw.g2},
              {"M_NPU", hw.M_NPU},
              {"npus_per_server", hw.npus_per_server},
              {"ar_compute_coeff_tp", hw.ar_compute_coeff_tp},
              {"ar_compute_coeff_dp", hw.ar_compute_coeff_dp},
              {"memory_headroom", hw.memory_headroom}};
}

inline json ToJson(const ModelConfig& m) {
  return json{{"s", m.s}, {"h", m.h}, {"a", m.a},     {"H", m.H},
              {"L", m.L}, {"V", m.V}, {"u", m.u},     {"S_t", m.S_t},
              {"k", m.k}};
}

inline json ToJson(const ParallelStrategy& s) {
  json j{{"d", s.d}, {"t", s.t}, {"p", s.p},
         {"b", s.b}, {"m", s.m}, {"G", s.G}};
  if (s.B) j["B"] = *s.B;
  return j;
}

inline ParallelStrategy StrategyFromJson(const json& j) {
  ParallelStrategy s;
  s.d = j.at("d").get<int>();
  s.t = j.at("t").get<int>();
  s.p = j.at("p").get<int>();
  s.b = j.at("b").get<int>();
  s.m = j.at("m").get<int>();
  s.G = j.at("G").get<int>();
  if (j.contains("B")) s.B = j.at("B").get<int>();
  return s;
}

inline HardwareConfig ParseHardware(std::string_view text) {
  return HardwareFromJson(detail::ParseDocument(text));
}

inline ModelConfig ParseModel(std::string_view text) {
  return ModelFromJson(detail::ParseDocument(text));
}

inline std::pair<HardwareConfig, ModelConfig> ParseConfigs(
    std::string_view hardware_doc, std::string_view model_doc) {
  return {ParseHardware(hardware_doc), ParseModel(model_doc)};
}

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Structural feasibility only: products, bounds and divisibility. Memory is
/// checked by the memory model.
inline ValidationReport ValidateStrategy(const ParallelStrategy& s,
                                         const HardwareConfig& hw,
                                         const ModelConfig& model) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (s.d < 1 || s.t < 1 || s.p < 1 || s.b < 1 || s.G < 1) {
    fail("d, t, p, b and G must be positive integers");
    return report;
  }
  const long long dtp = static_cast<long long>(s.d) * s.t * s.p;
  if (dtp != hw.n) {
    fail("d·t·p=" + std::to_string(dtp) + " ≠ n=" + std::to_string(hw.n));
  }
  if (s.p > model.L) {
    fail("p=" + std::to_string(s.p) + " exceeds L=" + std::to_string(model.L));
  }
  if (s.t > hw.npus_per_server) {
    fail("t=" + std::to_string(s.t) + " exceeds npus_per_server=" +
         std::to_string(hw.npus_per_server));
  }
  const long long bd = static_cast<long long>(s.b) * s.d;
  if (s.G % bd != 0) {
    fail("b·d does not divide G");
  } else if (s.m < 1 || bd * s.m != s.G) {
    fail("b·m·d=" + std::to_string(bd * s.m) + " ≠ G=" + std::to_string(s.G));
  }
  return report;
}

}  // namespace ptdplan
