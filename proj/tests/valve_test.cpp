#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fluidic/error.hpp"
#include "fluidic/valve.hpp"

using namespace fluidic;

namespace {

ValveSpec mono() { return ValveSpec{}; }

ValveSpec bi() {
  ValveSpec s;
  s.stability = Stability::Bistable;
  return s;
}

}  // namespace

TEST(ValveSpec, Defaults) {
  const ValveSpec s;
  EXPECT_EQ(s.snap_through_kpa, 134.0);
  EXPECT_EQ(s.snap_back_kpa, 56.0);
  EXPECT_EQ(s.hysteresis_width(), 78.0);
  EXPECT_TRUE(s.valid());
}

TEST(ValveSpec, Invariant) {
  ValveSpec s;
  s.snap_back_kpa = 134.0;
  EXPECT_FALSE(s.valid());
  EXPECT_THROW(s.check(), Error);
  s.snap_back_kpa = 0.0;
  EXPECT_FALSE(s.valid());
  s.snap_back_kpa = 0.5;
  EXPECT_TRUE(s.valid());
}

TEST(MembraneUpdate, SpecExamples) {
  EXPECT_EQ(membrane_update(mono(), MembraneState::Up, 150.0), MembraneState::Down);
  EXPECT_EQ(membrane_update(mono(), MembraneState::Down, 0.0), MembraneState::Up);
  EXPECT_EQ(membrane_update(mono(), MembraneState::Down, 70.0), MembraneState::Down);
  EXPECT_EQ(membrane_update(bi(), MembraneState::Down, 0.0), MembraneState::Down);
  EXPECT_EQ(membrane_update(bi(), MembraneState::Down, -60.0), MembraneState::Up);
}

TEST(MembraneUpdate, InclusiveThresholds) {
  EXPECT_EQ(membrane_update(mono(), MembraneState::Up, 134.0), MembraneState::Down);
  EXPECT_EQ(membrane_update(mono(), MembraneState::Up, 133.999), MembraneState::Up);
  EXPECT_EQ(membrane_update(mono(), MembraneState::Down, 56.0), MembraneState::Up);
  EXPECT_EQ(membrane_update(mono(), MembraneState::Down, 56.001), MembraneState::Down);
  EXPECT_EQ(membrane_update(bi(), MembraneState::Down, -56.0), MembraneState::Up);
  EXPECT_EQ(membrane_update(bi(), MembraneState::Down, -55.999), MembraneState::Down);
}

// Independent transition table written from the rule statement.
TEST(MembraneUpdate, MatchesOracleOnGrid) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> st_d(2.0, 300.0);
  for (int i = 0; i < 200; ++i) {
    ValveSpec s;
    s.snap_through_kpa = st_d(rng);
    s.snap_back_kpa = std::uniform_real_distribution<double>(1.0, s.snap_through_kpa - 0.5)(rng);
    for (Stability stab : {Stability::Monostable, Stability::Bistable}) {
      s.stability = stab;
      const double reset = stab == Stability::Monostable ? s.snap_back_kpa : -s.snap_back_kpa;
      for (double d = -320.0; d <= 320.0; d += 7.25) {
        const MembraneState from_up = d >= s.snap_through_kpa ? MembraneState::Down : MembraneState::Up;
        const MembraneState from_down = d <= reset ? MembraneState::Up : MembraneState::Down;
        EXPECT_EQ(membrane_update(s, MembraneState::Up, d), from_up);
        EXPECT_EQ(membrane_update(s, MembraneState::Down, d), from_down);
      }
    }
  }
}

TEST(MembraneUpdate, Idempotent) {
  for (const ValveSpec& s : {mono(), bi()}) {
    for (MembraneState st : {MembraneState::Up, MembraneState::Down}) {
      for (double d = -200.0; d <= 200.0; d += 1.0) {
        const auto once = membrane_update(s, st, d);
        EXPECT_EQ(membrane_update(s, once, d), once);
      }
    }
  }
}

TEST(MembraneUpdate, MonotoneTrigger) {
  for (const ValveSpec& s : {mono(), bi()}) {
    bool triggered = false;
    for (double d = -200.0; d <= 300.0; d += 0.5) {
      const bool down = membrane_update(s, MembraneState::Up, d) == MembraneState::Down;
      if (triggered) {
        EXPECT_TRUE(down) << d;
      }
      triggered = triggered || down;
    }
    EXPECT_TRUE(triggered);
  }
}

TEST(MembraneUpdate, BistableHoldsAtZero) {
  EXPECT_EQ(membrane_update(bi(), MembraneState::Up, 0.0), MembraneState::Up);
  EXPECT_EQ(membrane_update(bi(), MembraneState::Down, 0.0), MembraneState::Down);
}

TEST(MembraneUpdate, MonostableRelaxesInOneStep) {
  for (MembraneState st : {MembraneState::Up, MembraneState::Down}) {
    EXPECT_EQ(membrane_update(mono(), st, 0.0), MembraneState::Up);
  }
}

TEST(TubeStates, Complementary) {
  EXPECT_EQ(tube_states(MembraneState::Up), (TubeStates{TubeState::Kinked, TubeState::Open}));
  EXPECT_EQ(tube_states(MembraneState::Down), (TubeStates{TubeState::Open, TubeState::Kinked}));
  for (MembraneState st : {MembraneState::Up, MembraneState::Down}) {
    EXPECT_NE(tube_states(st).top, tube_states(st).bottom);
  }
}

TEST(Sweep, TenKpaSteps) {
  const auto ramp = triangle_ramp(160.0, 10.0);
  ASSERT_EQ(ramp.size(), 33U);
  EXPECT_EQ(ramp.front(), 0.0);
  EXPECT_EQ(ramp[16], 160.0);
  EXPECT_EQ(ramp.back(), 0.0);
  const auto curve = sweep_hysteresis(mono(), 160.0, ramp);
  const auto sp = measure_switch_points(curve);
  ASSERT_TRUE(sp.has_value());
  EXPECT_EQ(sp->rising_kpa, 140.0);
  EXPECT_EQ(sp->falling_kpa, 50.0);
  EXPECT_NEAR(sp->width(), 78.0, 12.0);
}

TEST(Sweep, OneKpaStepsHitThresholdsExactly) {
  const auto curve = sweep_hysteresis(mono(), 160.0, triangle_ramp(160.0, 1.0));
  const auto sp = measure_switch_points(curve);
  ASSERT_TRUE(sp.has_value());
  EXPECT_EQ(sp->rising_kpa, 134.0);
  EXPECT_EQ(sp->falling_kpa, 56.0);
  EXPECT_LE(std::abs(sp->width() - 78.0), 1.0);
}

TEST(Sweep, OutputFollowsBottomTube) {
  const auto curve = sweep_hysteresis(mono(), 160.0, triangle_ramp(160.0, 1.0));
  MembraneState st = MembraneState::Up;
  for (const auto& pt : curve) {
    st = membrane_update(mono(), st, pt.control_kpa);
    EXPECT_EQ(pt.output_kpa, st == MembraneState::Up ? 160.0 : 0.0) << pt.control_kpa;
  }
}

TEST(Sweep, ConstantZeroPassesSupply) {
  const std::vector<double> ramp(20, 0.0);
  for (const auto& pt : sweep_hysteresis(mono(), 160.0, ramp)) {
    EXPECT_EQ(pt.output_kpa, 160.0);
  }
  EXPECT_FALSE(measure_switch_points(sweep_hysteresis(mono(), 160.0, ramp)).has_value());
}

TEST(Sweep, BistableNeverResetsOnPositiveRamp) {
  const auto curve = sweep_hysteresis(bi(), 160.0, triangle_ramp(160.0, 1.0));
  EXPECT_FALSE(measure_switch_points(curve).has_value());
  EXPECT_EQ(curve.back().output_kpa, 0.0);
}

TEST(Sweep, RejectsNonFinite) {
  const std::vector<double> ramp{0.0, std::nan("")};
  EXPECT_THROW(sweep_hysteresis(mono(), 160.0, ramp), Error);
}

TEST(Sweep, Csv) {
  std::ostringstream os;
  const std::vector<SweepPoint> pts{{0.0, 160.0}, {134.0, 0.0}};
  write_sweep_csv(os, pts);
  EXPECT_EQ(os.str(), "control_kpa,output_kpa\n0,160\n134,0\n");
}

TEST(DesignParams, DocumentationOnly) {
  ValveDesignParams p{1.0, 1.0, 45.0, 2.0, 1.5, 3.0};
  EXPECT_TRUE(p.valid());
  p.v_id_mm = 0.0;
  EXPECT_FALSE(p.valid());
  EXPECT_NE(ValveDesignParams::kTrend.find("v_id"), std::string_view::npos);
}
