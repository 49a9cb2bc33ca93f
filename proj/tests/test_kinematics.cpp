#include <doctest.h>

#include <cmath>

#include "swarmsim/angles.hpp"
#include "swarmsim/errors.hpp"
#include "swarmsim/kinematics.hpp"
#include "swarmsim/rng.hpp"

using namespace swarmsim;

TEST_CASE("forward kinematics on the default chassis") {
  RobotParams p;

  SUBCASE("equal wheel speeds give pure translation") {
    const Twist t = forward_kinematics({10.0, 10.0}, p);
    CHECK(t.linear_mps == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(t.angular_radps == doctest::Approx(0.0));
  }
  SUBCASE("opposite wheel speeds give pure rotation") {
    const Twist t = forward_kinematics({-10.0, 10.0}, p);
    CHECK(t.linear_mps == doctest::Approx(0.0));
    CHECK(t.angular_radps ==
          doctest::Approx(0.016 * 20.0 / 0.06).epsilon(1e-12));
    CHECK(t.angular_radps == doctest::Approx(5.3333333333).epsilon(1e-9));
  }
  SUBCASE("mixed speeds") {
    const Twist t = forward_kinematics({5.0, 10.0}, p);
    CHECK(t.linear_mps == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(t.angular_radps == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("non-finite input is rejected") {
    CHECK_THROWS_AS(forward_kinematics({std::nan(""), 0.0}, p), InvalidInput);
    CHECK_THROWS_AS(forward_kinematics({0.0, INFINITY}, p), InvalidInput);
  }
}

TEST_CASE("inverse kinematics") {
  RobotParams p;

  SUBCASE("recovers the mixed-speed wheel pair") {
    const WheelSpeeds w = inverse_kinematics({0.12, 4.0 / 3.0}, p);
    CHECK(w.left_radps == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(w.right_radps == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("zero command maps to zero wheels") {
    const WheelSpeeds w = inverse_kinematics({0.0, 0.0}, p);
    CHECK(w.left_radps == 0.0);
    CHECK(w.right_radps == 0.0);
  }
  SUBCASE("pure translation splits equally") {
    const WheelSpeeds w = inverse_kinematics({0.16, 0.0}, p);
    CHECK(w.left_radps == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(w.right_radps == doctest::Approx(10.0).epsilon(1e-12));
  }
}

TEST_CASE("forward and inverse are mutual inverses within saturation") {
  RobotParams p;
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const Twist c{rng.uniform(-0.28, 0.28), rng.uniform(-5.0, 5.0)};
    const Twist back = forward_kinematics(inverse_kinematics(c, p), p);
    CHECK(back.linear_mps ==
          doctest::Approx(c.linear_mps).epsilon(1e-12).scale(1.0));
    CHECK(back.angular_radps ==
          doctest::Approx(c.angular_radps).epsilon(1e-12).scale(1.0));

    const WheelSpeeds w{rng.uniform(-17.5, 17.5), rng.uniform(-17.5, 17.5)};
    const WheelSpeeds wback = inverse_kinematics(forward_kinematics(w, p), p);
    CHECK(wback.left_radps == doctest::Approx(w.left_radps).epsilon(1e-12));
    CHECK(wback.right_radps == doctest::Approx(w.right_radps).epsilon(1e-12));
  }
}

TEST_CASE("forward kinematics is linear in wheel speeds") {
  RobotParams p;
  const WheelSpeeds w{3.0, -7.0};
  for (double a : {0.0, 0.5, 2.0, -3.0}) {
    const Twist scaled = forward_kinematics({a * w.left_radps,
                                             a * w.right_radps}, p);
    const Twist base = forward_kinematics(w, p);
    CHECK(scaled.linear_mps == doctest::Approx(a * base.linear_mps));
    CHECK(scaled.angular_radps == doctest::Approx(a * base.angular_radps));
  }
}

TEST_CASE("twist saturation") {
  RobotParams p;

  SUBCASE("over-speed straight command clamps to the linear cap") {
    const Twist t = saturate_twist({0.50, 0.0}, p);
    CHECK(t.linear_mps == doctest::Approx(0.28).epsilon(1e-12));
    CHECK(t.angular_radps == 0.0);
  }
  SUBCASE("command within limits is untouched") {
    const Twist t = saturate_twist({0.10, 0.5}, p);
    CHECK(t.linear_mps == 0.10);
    CHECK(t.angular_radps == 0.5);
  }
  SUBCASE("wheel cap scales uniformly and preserves the ratio") {
    const Twist c{0.28, 5.0};
    const Twist t = saturate_twist(c, p);
    const WheelSpeeds w = inverse_kinematics(t, p);
    const double max_wheel =
        std::max(std::abs(w.left_radps), std::abs(w.right_radps));
    CHECK(max_wheel == doctest::Approx(17.5).epsilon(1e-12));
    CHECK(t.linear_mps / t.angular_radps ==
          doctest::Approx(c.linear_mps / c.angular_radps).epsilon(1e-12));
  }
  SUBCASE("saturation is idempotent and direction-preserving") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const Twist c{rng.uniform(-1.0, 1.0), rng.uniform(-30.0, 30.0)};
      const Twist once = saturate_twist(c, p);
      const Twist twice = saturate_twist(once, p);
      CHECK(twice.linear_mps == doctest::Approx(once.linear_mps).epsilon(1e-12));
      CHECK(twice.angular_radps ==
            doctest::Approx(once.angular_radps).epsilon(1e-12));
      // saturate(c) = k*c for one common 0 < k <= 1
      if (std::abs(c.linear_mps) > 1e-9 && std::abs(c.angular_radps) > 1e-9) {
        const double kv = once.linear_mps / c.linear_mps;
        const double kw = once.angular_radps / c.angular_radps;
        CHECK(kv == doctest::Approx(kw).epsilon(1e-12));
        CHECK(kv > 0.0);
        CHECK(kv <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("robot parameter validation names the bad field") {
  RobotParams p;
  p.wheel_radius_m = 0.0;
  CHECK_THROWS_WITH_AS(p.validate(),
                       doctest::Contains("wheel_radius_m"), InvalidInput);
  p = RobotParams{};
  p.ticks_per_rev = -5;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("ticks_per_rev"),
                       InvalidInput);
  p = RobotParams{};
  p.max_linear_speed_mps = 0.29;  // exceeds wheel_radius * max_wheel_speed
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = RobotParams{};
  CHECK_NOTHROW(p.validate());
  CHECK(p.meters_per_tick() > 0.0);
  CHECK(p.radians_per_tick() == doctest::Approx(kTwoPi / 1440.0));
}

TEST_CASE("angle normalization keeps theta in (-pi, pi]") {
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(0.1 + 4.0 * kPi) == doctest::Approx(0.1));
  CHECK(normalize_angle(-0.1 - 6.0 * kPi) == doctest::Approx(-0.1));
}
