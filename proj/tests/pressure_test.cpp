#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fluidic/error.hpp"
#include "fluidic/numeric.hpp"
#include "fluidic/pressure.hpp"

using namespace fluidic;

TEST(Pressure, RejectsOutOfRange) {
  EXPECT_EQ(Pressure::kpa(0.0).value(), 0.0);
  EXPECT_EQ(Pressure::kpa(300.0).value(), 300.0);
  EXPECT_THROW(Pressure::kpa(-0.1), Error);
  EXPECT_THROW(Pressure::kpa(300.5), Error);
  EXPECT_THROW(Pressure::kpa(std::numeric_limits<double>::quiet_NaN()), Error);
  EXPECT_THROW(Pressure::kpa(std::numeric_limits<double>::infinity()), Error);
  EXPECT_EQ(Pressure::kpa(450.0, 500.0).value(), 450.0);
}

TEST(KpaToLogic, SupplyIsHigh) { EXPECT_EQ(kpa_to_logic(160.0), LogicLevel::High); }

TEST(KpaToLogic, AtmosphereIsLow) { EXPECT_EQ(kpa_to_logic(0.0), LogicLevel::Low); }

TEST(KpaToLogic, ThresholdIsInclusive) {
  EXPECT_EQ(kpa_to_logic(80.0), LogicLevel::High);
  EXPECT_EQ(kpa_to_logic(std::nextafter(80.0, 0.0)), LogicLevel::Low);
  EXPECT_EQ(kpa_to_logic(Pressure::kpa(80.0)), LogicLevel::High);
}

TEST(LogicToKpa, Rails) {
  EXPECT_EQ(logic_to_kpa(LogicLevel::High).value(), 150.0);
  EXPECT_EQ(logic_to_kpa(LogicLevel::Low).value(), 0.0);
  EXPECT_THROW(logic_to_kpa(LogicLevel::Undefined), Error);
}

TEST(RailConfig, Invariant) {
  EXPECT_TRUE(RailConfig{}.valid());
  RailConfig bad;
  bad.logic_threshold = 150.0;
  EXPECT_FALSE(bad.valid());
  EXPECT_THROW(bad.check(), Error);
  RailConfig above_supply;
  above_supply.p_high = 170.0;
  EXPECT_FALSE(above_supply.valid());
  RailConfig equal_supply;
  equal_supply.p_high = 160.0;
  EXPECT_TRUE(equal_supply.valid());
}

TEST(LogicLevels, RoundTripUnderValidRails) {
  for (double low : {0.0, 5.0, 20.0}) {
    for (double thr : {30.0, 80.0, 99.0}) {
      for (double high : {100.0, 150.0, 200.0}) {
        for (double supply : {200.0, 250.0}) {
          RailConfig cfg{supply, high, low, thr};
          ASSERT_TRUE(cfg.valid());
          for (LogicLevel l : {LogicLevel::Low, LogicLevel::High}) {
            EXPECT_EQ(kpa_to_logic(logic_to_kpa(l, cfg), cfg), l);
          }
        }
      }
    }
  }
}

TEST(KpaToLogic, Monotone) {
  LogicLevel prev = LogicLevel::Low;
  for (double p = 0.0; p <= 300.0; p += 0.25) {
    const LogicLevel l = kpa_to_logic(p);
    if (prev == LogicLevel::High) {
      EXPECT_EQ(l, LogicLevel::High) << p;
    }
    prev = l;
  }
}

TEST(LogicLevels, Characters) {
  EXPECT_EQ(logic_char(LogicLevel::Low), '0');
  EXPECT_EQ(logic_char(LogicLevel::High), '1');
  EXPECT_EQ(logic_char(LogicLevel::Undefined), 'X');
}

TEST(Numbers, ShortestRoundTrip) {
  for (double v : {0.0, 1.0, 134.0, 56.5, 0.1, 1.0 / 3.0, 299.99999999999997, 1e-7}) {
    const auto text = format_number(v);
    const auto back = parse_number(text);
    ASSERT_TRUE(back.has_value()) << text;
    EXPECT_EQ(*back, v) << text;
  }
  EXPECT_EQ(format_number(134.0), "134");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
}

TEST(Numbers, StrictParse) {
  EXPECT_EQ(parse_number("+12.5"), 12.5);
  EXPECT_FALSE(parse_number("12kPa").has_value());
  EXPECT_FALSE(parse_number("").has_value());
  EXPECT_FALSE(parse_number("inf").has_value());
  EXPECT_FALSE(parse_number("nan").has_value());
  EXPECT_FALSE(parse_number("1e999").has_value());
  EXPECT_FALSE(parse_number(" 1").has_value());
}
