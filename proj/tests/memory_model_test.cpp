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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ptdplan/memory_model.hpp"

namespace ptdplan {
namespace {

using testing::SmallGpt;
using testing::SmallCluster;
using testing::ToyHardware;
using testing::ToyModel;

// Toy model: per-layer parameters 4h^2+2hH+9h+H = 172, so layer bytes
// L * 172 * u = 688 and vocabulary bytes V h u = 128.
TEST(EstimateMemory, ToyGolden) {
  const auto e = EstimateMemory(ToyModel(), MakeStrategy(1, 1, 1, 1, 8));
  EXPECT_EQ(e.M_w, 816);
  EXPECT_EQ(e.M_o, 7344);
  EXPECT_EQ(e.M_a, 1152);
  EXPECT_EQ(e.M_m, 9312);
  // 2Lsb(h+H) = 192, Lsb(16h+2H+5sa) + Vhu = 1088, 10 * 688 = 6880
  EXPECT_EQ(e.per_npu_requirement, 192 + 1088 + 6880);
}

TEST(EstimateMemory, ToyShardedGolden) {
  // (t, p, b) = (2, 2, 2): 384 + 2048 / 2 + 6880 / 4
  EXPECT_EQ(EstimateMemory(ToyModel(), MakeStrategy(2, 2, 2, 2, 8)).per_npu_requirement, 3128);
}

TEST(EstimateMemory, OptimizerIsNineTimesWeights) {
  for (const auto& model : {ToyModel(), SmallGpt()}) {
    const auto e = EstimateMemory(model, MakeStrategy(1, 2, 2, 4, 64));
    EXPECT_DOUBLE_EQ(e.M_o / e.M_w, 9.0);
  }
}

TEST(EstimateMemory, ActivationsLinearInBatchAndStages) {
  const auto model = SmallGpt();
  const double base = EstimateMemory(model, MakeStrategy(1, 1, 1, 1, 64)).M_a;
  for (int b : {1, 2, 4, 8}) {
    for (int p : {1, 2, 4, 8}) {
      EXPECT_EQ(EstimateMemory(model, MakeStrategy(1, 1, p, b, 64)).M_a, base * b * p);
    }
  }
}

TEST(IsOom, EqualityStillFits) {
  auto hw = ToyHardware(1);
  const auto s = MakeStrategy(1, 1, 1, 1, 8);
  hw.M_NPU = 8160;
  EXPECT_FALSE(IsOom(hw, ToyModel(), s));
  hw.M_NPU = 8159;
  EXPECT_TRUE(IsOom(hw, ToyModel(), s));
}

TEST(IsOom, HeadroomReducesCapacity) {
  auto hw = ToyHardware(1);
  hw.M_NPU = 10000;
  hw.memory_headroom = 0.2;
  EXPECT_TRUE(IsOom(hw, ToyModel(), MakeStrategy(1, 1, 1, 1, 8)));
}

TEST(IsOom, MonotoneInMicroBatch) {
  const auto model = SmallGpt();
  for (double gib : {4.0, 8.0, 16.0}) {
    const auto hw = SmallCluster(64, gib * (1ull << 30));
    for (int t = 1; t <= 8; t *= 2) {
      for (int p = 1; p <= 8; p *= 2) {
        bool seen_oom = false;
        for (int b = 1; b <= 256; b *= 2) {
          const bool oom = IsOom(hw, model, MakeStrategy(64 / (t * p), t, p, b, 4096));
          EXPECT_TRUE(!seen_oom || oom) << "t=" << t << " p=" << p << " b=" << b;
          seen_oom = seen_oom || oom;
        }
      }
    }
  }
}

TEST(BoundSet, AmpleMemoryAdmitsEverything) {
  const BoundSet bounds(ToyHardware(8), ToyModel(), 1);
  EXPECT_EQ(bounds.t_min, 1);
  EXPECT_EQ(bounds.p_min(1), 1);
  EXPECT_EQ(bounds.b_max(1, 1), kDefaultMicroBatchCeiling);
  EXPECT_EQ(BoundSet(ToyHardware(8), ToyModel(), 1, 64).b_max(1, 1), 64);
}

TEST(BoundSet, ToyBoundsByHand) {
  auto hw = ToyHardware(8);
  hw.M_NPU = 1000;
  const BoundSet bounds(hw, ToyModel(), 1);
  EXPECT_EQ(bounds.m1, 808);
  EXPECT_EQ(bounds.m2, 1088);
  EXPECT_EQ(bounds.m3, 6880);
  EXPECT_EQ(bounds.t_min, 2);
  // 6880 / (808 * 2 - 1088) = 13.03 -> 14; at t = 4, 6880 / 2144 = 3.2 -> 4
  EXPECT_EQ(bounds.p_min(2), 14);
  EXPECT_EQ(bounds.p_min(4), 4);
  EXPECT_FALSE(bounds.p_min(1).has_value());
}

TEST(FeasibilityBounds, ActivationFloorAloneTooLarge) {
  auto hw = ToyHardware(8);
  hw.M_NPU = 192;  // exactly the b = 1 activation floor
  try {
    FeasibilityBounds(hw, ToyModel(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
    EXPECT_TRUE(e.is_infeasible());
  }
}

TEST(FeasibilityBounds, HintFillsMicroBatchCeilings) {
  const auto hw = SmallCluster(64, 8.0 * (1ull << 30));
  const auto bounds = FeasibilityBounds(hw, SmallGpt(), 1, 2);
  ASSERT_EQ(bounds.b_max_at_hint.size(), 4u);
  for (const auto& [t, b] : bounds.b_max_at_hint) EXPECT_EQ(b, bounds.b_max(2, t));
}

// The closed-form bounds and the direct per-NPU check must agree on every
// grid point; a disagreement would make pruning drop a fitting strategy.
TEST(BoundSet, AgreesWithDirectCheckOnExhaustiveGrid) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> gib(1.0, 40.0);
  const auto model = SmallGpt();
  for (int trial = 0; trial < 6; ++trial) {
    const auto hw = SmallCluster(4096, gib(rng) * (1ull << 30));
    for (int b = 1; b <= 64; ++b) {
      const BoundSet bounds(hw, model, b);
      for (int t = 1; t <= 64; ++t) {
        for (int p = 1; p <= 64; ++p) {
          const auto s = MakeStrategy(1, t, p, b, b);
          ASSERT_EQ(bounds.admits(p, t), !IsOom(hw, model, s))
              << "p=" << p << " t=" << t << " b=" << b << " cap=" << hw.M_NPU;
        }
      }
    }
  }
}

TEST(BoundSet, MicroBatchCeilingMatchesBruteForce) {
  const auto model = SmallGpt();
  for (double g : {2.0, 6.0, 24.0}) {
    const auto hw = SmallCluster(64, g * (1ull << 30));
    const BoundSet bounds(hw, model, 1);
    for (int t = 1; t <= 8; t *= 2) {
      for (int p = 1; p <= 16; p *= 2) {
        int expected = 0;
        for (int b = 1; b <= kDefaultMicroBatchCeiling; b *= 2) {
          if (IsOom(hw, model, MakeStrategy(1, t, p, b, b))) break;
          expected = b;
        }
        EXPECT_EQ(bounds.b_max(p, t), expected) << "p=" << p << " t=" << t;
      }
    }
  }
}

TEST(BoundSet, HugeModelOverflowsToNoDegree) {
  auto hw = ToyHardware(8);
  hw.M_NPU = 200;
  const BoundSet bounds(hw, ToyModel(), 1);  // m1 = 8
  EXPECT_EQ(bounds.t_min, 136);
  EXPECT_FALSE(bounds.admits(8, 8));
}

TEST(EstimateMemory, JsonRoundTrip) {
  const auto e = EstimateMemory(SmallGpt(), MakeStrategy(2, 4, 2, 2, 256));
  EXPECT_EQ(MemoryFromJson(nlohmann::json::parse(ToJson(e).dump())), e);
}

}  // namespace
}  // namespace ptdplan
