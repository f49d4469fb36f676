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

// Command-line front end.
//
//   ptdplan plan      --hardware hw.json --model model.json --calibration cal.json
//                     --global-batch 256 [--samples N] [--top-k 5] [--no-prune]
//   ptdplan estimate  ... --strategy d,t,p,b
//   ptdplan simulate  --stages 4 --micro-batches 8 --forward 1 --backward 2 [--trace out.csv]
//   ptdplan sweep     ... --strategy d,t,p,b --param gbs|mbs --values 1,2,4 [--out f.csv]
//   ptdplan calibrate --profile rho.csv --profile q.csv --out cal.json
//
// Exit status: 0 success, 2 invalid input, 3 infeasible.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptdplan.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument, "cannot read '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ConfigFlags {
  std::string hardware;
  std::string model;
  std::vector<std::string> calibration;
  int global_batch = 0;
  long long samples = 0;
  std::string format = "table";
  double overlap_share = -1;

  void Register(CLI::App* cmd, bool need_global_batch) {
    cmd->add_option("--hardware", hardware, "Hardware config (JSON)")->required();
    cmd->add_option("--model", model, "Model config (JSON)")->required();
    cmd->add_option("--calibration", calibration,
                    "Calibration file(s): JSON bundle or b,s,h,t,rho / members,q CSV")
        ->required();
    auto* gb = cmd->add_option("--global-batch", global_batch, "Global batch size G");
    if (need_global_batch) gb->required();
    cmd->add_option("--samples", samples, "Total training samples (overrides the model's S_t)");
    cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"table", "json", "csv"}));
    cmd->add_option("--overlap-backward-share", overlap_share,
                    "Backward share of TP communication available for overlap (default k/(1+k))");
  }

  ptdplan::PlanRequest Load() const {
    ptdplan::PlanRequest req;
    req.hardware = ptdplan::ParseHardware(ReadFile(hardware));
    req.model = ptdplan::ParseModel(ReadFile(model));
    ptdplan::CalibrationSamples samples_in;
    for (const auto& path : calibration) {
      samples_in.Merge(ptdplan::ParseCalibrationSamples(ReadFile(path)));
    }
    req.calibration = ptdplan::CalibrationTable::FromSamples(samples_in);
    req.G = global_batch;
    req.S_t = samples > 0 ? samples : req.model.S_t;
    if (samples < 0) {
      throw ptdplan::Error(ptdplan::ErrorKind::kInvalidValue, "--samples must be ≥ 1");
    }
    if (overlap_share >= 0) {
      if (overlap_share > 1) {
        throw ptdplan::Error(ptdplan::ErrorKind::kInvalidValue,
                             "--overlap-backward-share must lie in [0, 1]");
      }
      req.cost.overlap_backward_share = overlap_share;
    }
    return req;
  }
};

std::vector<int> ParseIntList(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t used = 0;
      const int v = std::stoi(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument,
                           std::string("malformed ") + what + " '" + text + "'");
    }
  }
  return out;
}

/// "d,t,p,b" against the request's G.
ptdplan::ParallelStrategy ParseStrategy(const std::string& text, int G) {
  const auto v = ParseIntList(text, "strategy");
  if (v.size() != 4) {
    throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument,
                         "strategy must be d,t,p,b, got '" + text + "'");
  }
  return ptdplan::MakeStrategy(v[0], v[1], v[2], v[3], G);
}

int RunPlan(const ConfigFlags& flags, int top_k, bool no_prune, bool timing) {
  auto req = flags.Load();
  req.top_k = top_k;
  req.prune = !no_prune;
  const auto plan = ptdplan::Plan(req);
  if (flags.format == "json") {
    std::cout << ptdplan::ToJson(plan).dump(2) << "\n";
  } else if (flags.format == "csv") {
    ptdplan::RenderPlanCsv(std::cout, plan);
  } else {
    ptdplan::RenderPlanTable(std::cout, plan);
  }
  if (timing) std::cerr << "search time: " << plan.search_duration << " s\n";
  return kExitOk;
}

int RunEstimate(const ConfigFlags& flags, const std::string& strategy_text) {
  const auto req = flags.Load();
  ptdplan::Validate(req);
  const auto model = req.effective_model();
  const auto strategy = ParseStrategy(strategy_text, req.G);
  const auto report = ptdplan::ValidateStrategy(strategy, req.hardware, model);
  if (!report.ok()) {
    for (const auto& v : report.violations) std::cerr << "invalid strategy: " << v << "\n";
    return kExitInvalid;
  }
  const auto breakdown =
      ptdplan::TotalBreakdown(req.hardware, model, req.calibration, strategy, req.cost);
  const auto memory = ptdplan::EstimateMemory(model, strategy);
  if (flags.format == "json") {
    std::cout << nlohmann::json{{"strategy", ptdplan::ToJson(strategy)},
                                {"time", ptdplan::ToJson(breakdown)},
                                {"memory", ptdplan::ToJson(memory)}}
                     .dump(2)
              << "\n";
  } else if (flags.format == "csv") {
    ptdplan::RankedPlan single;
    single.entries.push_back({strategy, breakdown, memory, strategy.m < strategy.p});
    ptdplan::RenderPlanCsv(std::cout, single);
  } else {
    ptdplan::RenderBreakdownTable(std::cout, strategy, breakdown, memory);
  }
  if (strategy.m < strategy.p) {
    std::cerr << "warning: m < p regime; the bubble estimate assumes m ≥ p\n";
  }
  if (ptdplan::IsOom(req.hardware, model, strategy)) {
    std::cerr << "out of memory: needs " << memory.per_npu_requirement << " bytes per NPU, "
              << req.hardware.usable_memory() << " available\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int RunSimulate(int stages, int micro_batches, double forward, double backward,
                const std::string& trace_path) {
  ptdplan::StageTiming timing;
  timing.p = stages;
  timing.m = micro_batches;
  timing.forward = forward;
  timing.backward = backward;
  const auto trace = ptdplan::Simulate1F1B(timing);
  const auto cmp = ptdplan::CompareBubble(timing);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) {
      throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument,
                           "cannot write '" + trace_path + "'");
    }
    ptdplan::WriteTraceCsv(out, trace);
  }
  std::cout << "makespan: " << trace.makespan << "\n"
            << "bubble: " << trace.bubble << "\n"
            << "closed_form_bubble: " << cmp.closed_form << "\n"
            << "relative_error: " << cmp.relative_error << "\n";
  if (!cmp.in_regime) {
    std::cout << "warning: m < p regime; closed-form bubble is not expected to match\n";
  }
  return kExitOk;
}

int RunSweep(ConfigFlags flags, const std::string& strategy_text, const std::string& param,
             const std::string& values_text, const std::string& out_path) {
  const auto values = ParseIntList(values_text, "values");
  if (values.empty()) {
    throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument, "--values is empty");
  }
  const bool sweep_g = param == "gbs";
  if (sweep_g && flags.global_batch == 0) flags.global_batch = values.front();
  auto req = flags.Load();
  const auto base = ParseStrategy(strategy_text, req.G);
  const auto points = ptdplan::Sweep(
      req, base,
      sweep_g ? ptdplan::SweepParameter::kGlobalBatch : ptdplan::SweepParameter::kMicroBatch,
      values);
  if (out_path.empty()) {
    ptdplan::RenderSweepCsv(std::cout, points);
  } else {
    std::ofstream out(out_path);
    if (!out) {
      throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument, "cannot write '" + out_path + "'");
    }
    ptdplan::RenderSweepCsv(out, points);
  }
  for (const auto& p : points) {
    if (!p.ok) std::cerr << "value " << p.value << ": " << p.error << "\n";
  }
  return kExitOk;
}

int RunCalibrate(const std::vector<std::string>& profiles, const std::string& out_path,
                 const std::string& interpolation) {
  ptdplan::CalibrationSamples samples;
  for (const auto& path : profiles) {
    samples.Merge(ptdplan::ParseCalibrationSamples(ReadFile(path)));
  }
  if (!interpolation.empty()) samples.mode = ptdplan::detail::ParseInterpolation(interpolation);
  const auto table = ptdplan::CalibrationTable::FromSamples(samples);
  std::ofstream out(out_path);
  if (!out) {
    throw ptdplan::Error(ptdplan::ErrorKind::kInvalidArgument, "cannot write '" + out_path + "'");
  }
  out << ptdplan::ToJson(table).dump(2) << "\n";
  std::cout << "wrote " << table.rho_samples().size() << " rho samples and "
            << table.q_samples().size() << " q samples to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytical 3D-parallel training planner"};
  app.require_subcommand(1);

  ConfigFlags plan_flags;
  int top_k = 5;
  bool no_prune = false;
  bool timing = false;
  auto* plan_cmd = app.add_subcommand("plan", "Search for the fastest (d,t,p,b)");
  plan_flags.Register(plan_cmd, true);
  plan_cmd->add_option("--top-k", top_k, "Number of strategies to report")
      ->check(CLI::PositiveNumber);
  plan_cmd->add_flag("--no-prune", no_prune, "Exhaustive search (structural and OOM filters only)");
  plan_cmd->add_flag("--timing", timing, "Print search time to stderr");

  ConfigFlags est_flags;
  std::string est_strategy;
  auto* est_cmd = app.add_subcommand("estimate", "Time and memory breakdown of one strategy");
  est_flags.Register(est_cmd, true);
  est_cmd->add_option("--strategy", est_strategy, "d,t,p,b")->required();

  int stages = 0;
  int micro_batches = 0;
  double forward = 0;
  double backward = 0;
  std::string trace_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Discrete-event 1F1B pipeline simulation");
  sim_cmd->add_option("--stages", stages, "Pipeline stages p")->required();
  sim_cmd->add_option("--micro-batches", micro_batches, "Micro batches m")->required();
  sim_cmd->add_option("--forward", forward, "Forward time per micro batch per stage")->required();
  sim_cmd->add_option("--backward", backward, "Backward time per micro batch per stage")
      ->required();
  sim_cmd->add_option("--trace", trace_path, "Write the event trace CSV here");

  ConfigFlags sweep_flags;
  std::string sweep_strategy;
  std::string sweep_param;
  std::string sweep_values;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a strategy across G or b values");
  sweep_flags.Register(sweep_cmd, false);
  sweep_cmd->add_option("--strategy", sweep_strategy, "Base d,t,p,b")->required();
  sweep_cmd->add_option("--param", sweep_param, "gbs (global batch) or mbs (micro batch)")
      ->required()
      ->check(CLI::IsMember({"gbs", "mbs"}));
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated ascending values")->required();
  sweep_cmd->add_option("--out", sweep_out, "CSV output path (default stdout)");

  std::vector<std::string> profiles;
  std::string cal_out;
  std::string interpolation;
  auto* cal_cmd = app.add_subcommand("calibrate", "Validate and normalize calibration data");
  cal_cmd->add_option("--profile", profiles, "Profile file(s)")->required();
  cal_cmd->add_option("--out", cal_out, "Normalized JSON bundle")->required();
  cal_cmd->add_option("--interpolation", interpolation, "nearest or log_linear_b")
      ->check(CLI::IsMember({"nearest", "log_linear_b"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*plan_cmd) return RunPlan(plan_flags, top_k, no_prune, timing);
    if (*est_cmd) return RunEstimate(est_flags, est_strategy);
    if (*sim_cmd) return RunSimulate(stages, micro_batches, forward, backward, trace_path);
    if (*sweep_cmd) {
      if (sweep_param == "mbs" && sweep_flags.global_batch == 0) {
        std::cerr << "sweep --param mbs needs --global-batch\n";
        return kExitInvalid;
      }
      return RunSweep(sweep_flags, sweep_strategy, sweep_param, sweep_values, sweep_out);
    }
    if (*cal_cmd) return RunCalibrate(profiles, cal_out, interpolation);
  } catch (const ptdplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_infeasible() ? kExitInfeasible : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
