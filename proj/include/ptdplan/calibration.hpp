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

// Profiled dynamic quantities: the compute-utilization reciprocal rho(b, s, h, t)
// and the intra-server bandwidth slowdown q(members).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "ptdplan/error.hpp"

namespace ptdplan {

struct RhoSample {
  int b = 1;
  int s = 1;
  int h = 1;
  int t = 1;
  double rho = 1;

  auto key() const { return std::tuple(s, h, t, b); }
  bool operator==(const RhoSample&) const = default;
};

struct QSample {
  int members = 1;
  double q = 1;

  bool operator==(const QSample&) const = default;
};

enum class Interpolation { kNearest, kLogLinearB };

inline const char* ToString(Interpolation mode) {
  return mode == Interpolation::kNearest ? "nearest" : "log_linear_b";
}

/// Raw samples as read from one or more documents, before validation. Either
/// list may be empty until documents are merged.
struct CalibrationSamples {
  std::vector<RhoSample> rho;
  std::vector<QSample> q;
  Interpolation mode = Interpolation::kLogLinearB;

  void Merge(const CalibrationSamples& other) {
    rho.insert(rho.end(), other.rho.begin(), other.rho.end());
    q.insert(q.end(), other.q.begin(), other.q.end());
    mode = other.mode;
  }
};

class CalibrationTable {
 public:
  /// Validates and freezes the samples. Throws InvalidSample (listing every
  /// offending record), DuplicateKey or EmptyTable.
  static CalibrationTable FromSamples(CalibrationSamples samples) {
    std::vector<std::string> invalid;
    for (const auto& r : samples.rho) {
      if (r.b < 1 || r.s < 1 || r.h < 1 || r.t < 1) {
        invalid.push_back(Describe(r) + ": keys must be positive");
      } else if (!(r.rho >= 1.0) || !std::isfinite(r.rho)) {
        invalid.push_back(Describe(r) + ": rho must be >= 1");
      }
    }
    for (const auto& q : samples.q) {
      if (q.members < 1) {
        invalid.push_back(Describe(q) + ": members must be positive");
      } else if (!(q.q > 0.0 && q.q <= 1.0)) {
        invalid.push_back(Describe(q) + ": q must lie in (0, 1]");
      }
    }
    if (!invalid.empty()) {
      std::string msg;
      for (const auto& line : invalid) msg += (msg.empty() ? "" : "; ") + line;
      throw Error(ErrorKind::kInvalidSample, msg);
    }
    if (samples.rho.empty()) {
      throw Error(ErrorKind::kEmptyTable, "no rho samples");
    }
    if (samples.q.empty()) {
      throw Error(ErrorKind::kEmptyTable, "no q samples");
    }

    std::sort(samples.rho.begin(), samples.rho.end(),
              [](const RhoSample& x, const RhoSample& y) { return x.key() < y.key(); });
    for (size_t i = 1; i < samples.rho.size(); ++i) {
      if (samples.rho[i].key() == samples.rho[i - 1].key()) {
        throw Error(ErrorKind::kDuplicateKey, Describe(samples.rho[i]));
      }
    }
    std::sort(samples.q.begin(), samples.q.end(),
              [](const QSample& x, const QSample& y) { return x.members < y.members; });
    for (size_t i = 1; i < samples.q.size(); ++i) {
      if (samples.q[i].members == samples.q[i - 1].members) {
        throw Error(ErrorKind::kDuplicateKey, Describe(samples.q[i]));
      }
    }
    CalibrationTable table;
    table.rho_ = std::move(samples.rho);
    table.q_ = std::move(samples.q);
    table.mode_ = samples.mode;
    return table;
  }

  const std::vector<RhoSample>& rho_samples() const { return rho_; }
  const std::vector<QSample>& q_samples() const { return q_; }
  Interpolation interpolation() const { return mode_; }

  /// Exact hit returns the sample. Otherwise the nearest (s, h, t) group is
  /// chosen and b is interpolated inside it, clamping outside the sampled range.
  double rho(int b, int s, int h, int t) const {
    const auto [first, last] = NearestGroup(s, h, t);
    if (b <= first->b) return first->rho;
    if (b >= (last - 1)->b) return (last - 1)->rho;
    auto hi = std::lower_bound(first, last, b,
                               [](const RhoSample& r, int v) { return r.b < v; });
    if (hi->b == b) return hi->rho;
    auto lo = hi - 1;
    const double x = std::log(static_cast<double>(b));
    const double x0 = std::log(static_cast<double>(lo->b));
    const double x1 = std::log(static_cast<double>(hi->b));
    const double w = (x - x0) / (x1 - x0);
    if (mode_ == Interpolation::kNearest) return w <= 0.5 ? lo->rho : hi->rho;
    return std::exp((1.0 - w) * std::log(lo->rho) + w * std::log(hi->rho));
  }

  /// Linear between bracketing member counts, clamped outside; a single
  /// member never sees congestion.
  double slowdown_q(int members) const {
    if (members <= 1) return 1.0;
    if (members <= q_.front().members) return q_.front().q;
    if (members >= q_.back().members) return q_.back().q;
    auto hi = std::lower_bound(q_.begin(), q_.end(), members,
                               [](const QSample& r, int v) { return r.members < v; });
    if (hi->members == members) return hi->q;
    auto lo = hi - 1;
    const double w = static_cast<double>(members - lo->members) /
                     static_cast<double>(hi->members - lo->members);
    return (1.0 - w) * lo->q + w * hi->q;
  }

  bool operator==(const CalibrationTable&) const = default;

  static std::string Describe(const RhoSample& r) {
    std::ostringstream os;
    os << "rho sample (b=" << r.b << ", s=" << r.s << ", h=" << r.h
       << ", t=" << r.t << ", rho=" << r.rho << ")";
    return os.str();
  }
  static std::string Describe(const QSample& q) {
    std::ostringstream os;
    os << "q sample (members=" << q.members << ", q=" << q.q << ")";
    return os.str();
  }

 private:
  using Iter = std::vector<RhoSample>::const_iterator;

  std::pair<Iter, Iter> NearestGroup(int s, int h, int t) const {
    auto log_gap = [](int x, int y) {
      return std::abs(std::log(static_cast<double>(x)) - std::log(static_cast<double>(y)));
    };
    Iter best = rho_.begin();
    double best_dist = std::numeric_limits<double>::infinity();
    for (Iter it = rho_.begin(); it != rho_.end();) {
      Iter end = it;
      while (end != rho_.end() && end->s == it->s && end->h == it->h && end->t == it->t) ++end;
      const double dist = log_gap(s, it->s) + log_gap(h, it->h) + log_gap(t, it->t);
      if (dist < best_dist) {
        best_dist = dist;
        best = it;
      }
      it = end;
    }
    Iter end = best;
    while (end != rho_.end() && end->s == best->s && end->h == best->h && end->t == best->t) ++end;
    return {best, end};
  }

  std::vector<RhoSample> rho_;
  std::vector<QSample> q_;
  Interpolation mode_ = Interpolation::kLogLinearB;
};

namespace detail {

inline std::string Trim(std::string_view sv) {
  const auto* ws = " \t\r\n";
  const auto b = sv.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = sv.find_last_not_of(ws);
  return std::string(sv.substr(b, e - b + 1));
}

inline std::vector<std::string> SplitCsv(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(Trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double ParseCsvNumber(const std::string& cell, int line_no) {
  try {
    size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kMalformedDocument,
              "line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
}

inline int ParseCsvInt(const std::string& cell, int line_no) {
  const double v = ParseCsvNumber(cell, line_no);
  if (std::floor(v) != v || std::abs(v) > std::numeric_limits<int>::max()) {
    throw Error(ErrorKind::kMalformedDocument,
                "line " + std::to_string(line_no) + ": '" + cell + "' is not an integer");
  }
  return static_cast<int>(v);
}

inline Interpolation ParseInterpolation(const std::string& name) {
  if (name == "nearest") return Interpolation::kNearest;
  if (name == "log_linear_b") return Interpolation::kLogLinearB;
  throw Error(ErrorKind::kMalformedDocument, "unknown interpolation '" + name + "'");
}

inline CalibrationSamples ParseCalibrationJson(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::kMalformedDocument, "calibration must be a JSON object");
  }
  CalibrationSamples out;
  try {
    for (const auto& item : doc.items()) {
      const auto& key = item.key();
      if (key == "interpolation") {
        out.mode = ParseInterpolation(item.value().get<std::string>());
      } else if (key == "rho") {
        for (const auto& r : item.value()) {
          out.rho.push_back({r.at("b").get<int>(), r.at("s").get<int>(),
                             r.at("h").get<int>(), r.at("t").get<int>(),
                             r.at("rho").get<double>()});
        }
      } else if (key == "q") {
        for (const auto& q : item.value()) {
          out.q.push_back({q.at("members").get<int>(), q.at("q").get<double>()});
        }
      } else {
        throw Error(ErrorKind::kMalformedDocument,
                    "unknown field '" + key + "' in calibration");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedDocument, e.what());
  }
  return out;
}

inline CalibrationSamples ParseCalibrationCsv(std::string_view text) {
  CalibrationSamples out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::vector<std::string> header;
  std::map<std::string, size_t> col;
  bool is_rho = false;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto cells = SplitCsv(line);
    if (header.empty()) {
      header = cells;
      for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
      const bool rho_cols = header.size() == 5 && col.count("b") && col.count("s") &&
                            col.count("h") && col.count("t") && col.count("rho");
      const bool q_cols = header.size() == 2 && col.count("members") && col.count("q");
      if (!rho_cols && !q_cols) {
        throw Error(ErrorKind::kMalformedDocument,
                    "header must be 'b,s,h,t,rho' or 'members,q', got '" + line + "'");
      }
      is_rho = rho_cols;
      continue;
    }
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::kMalformedDocument,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns");
    }
    if (is_rho) {
      out.rho.push_back({ParseCsvInt(cells[col["b"]], line_no),
                         ParseCsvInt(cells[col["s"]], line_no),
                         ParseCsvInt(cells[col["h"]], line_no),
                         ParseCsvInt(cells[col["t"]], line_no),
                         ParseCsvNumber(cells[col["rho"]], line_no)});
    } else {
      out.q.push_back({ParseCsvInt(cells[col["members"]], line_no),
                       ParseCsvNumber(cells[col["q"]], line_no)});
    }
  }
  if (header.empty()) throw Error(ErrorKind::kMalformedDocument, "empty calibration file");
  return out;
}

}  // namespace detail

/// Accepts either the JSON bundle (`{"interpolation", "rho": [...], "q": [...]}`)
/// or a delimited table with header `b,s,h,t,rho` or `members,q`.
inline CalibrationSamples ParseCalibrationSamples(std::string_view text) {
  const std::string head = detail::Trim(text.substr(0, 64));
  if (!head.empty() && head.front() == '{') return detail::ParseCalibrationJson(text);
  return detail::ParseCalibrationCsv(text);
}

inline CalibrationTable LoadCalibration(std::string_view text) {
  return CalibrationTable::FromSamples(ParseCalibrationSamples(text));
}

inline nlohmann::json ToJson(const CalibrationTable& table) {
  nlohmann::json rho = nlohmann::json::array();
  for (const auto& r : table.rho_samples()) {
    rho.push_back({{"b", r.b}, {"s", r.s}, {"h", r.h}, {"t", r.t}, {"rho", r.rho}});
  }
  nlohmann::json q = nlohmann::json::array();
  for (const auto& s : table.q_samples()) q.push_back({{"members", s.members}, {"q", s.q}});
  return {{"interpolation", ToString(table.interpolation())}, {"rho", rho}, {"q", q}};
}

}  // namespace ptdplan
