#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "swarmsim/errors.hpp"
#include "swarmsim/tracking.hpp"

using namespace swarmsim;

namespace {

WorldState static_world(Pose2D pose) {
  WorldState w;
  RobotTruth r;
  r.id = "r1";
  r.pose = pose;
  w.robots.push_back(r);
  return w;
}

}  // namespace

TEST_CASE("calibration: unit markers give the identity") {
  const FrameCalibration cal =
      calibrate_frame({0, 0}, {1, 0}, {0, 1});
  const Vec2 p = cal.to_global(Vec2{0.3, 0.7});
  CHECK(p.x == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(cal.heading_to_global(0.4) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("calibration: rotated markers rotate reports back") {
  // raw frame rotated +90 degrees relative to global: undoing it is -90
  const FrameCalibration cal =
      calibrate_frame({0, 0}, {0, 1}, {-1, 0});
  const Vec2 x_img = cal.to_global(Vec2{0, 1});
  CHECK(x_img.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x_img.y == doctest::Approx(0.0));
  const Vec2 p = cal.to_global(Vec2{0.5, 0.0});  // (x,y) -> (y,-x)
  CHECK(p.x == doctest::Approx(0.0));
  CHECK(p.y == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(cal.heading_to_global(0.0) ==
        doctest::Approx(-kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("calibration: marker spacing sets the scale") {
  SUBCASE("default spans keep raw marker distances") {
    const FrameCalibration cal =
        calibrate_frame({0, 0}, {2, 0}, {0, 2});
    const Vec2 x_img = cal.to_global(Vec2{2, 0});
    CHECK(x_img.x == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(x_img.y == doctest::Approx(0.0));
  }
  SUBCASE("pinned spans resize the field: double-spaced markers halve") {
    const FrameCalibration cal =
        calibrate_frame({0, 0}, {2, 0}, {0, 2}, 1.0, 1.0);
    const Vec2 p = cal.to_global(Vec2{1.0, 1.0});
    CHECK(p.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(0.5).epsilon(1e-12));
    const Vec2 x_img = cal.to_global(Vec2{2, 0});
    CHECK(x_img.x == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("calibration: origin marker lands exactly on (0,0)") {
  const FrameCalibration cal =
      calibrate_frame({3.2, -1.1}, {4.0, -0.3}, {2.4, -0.2});
  const Vec2 o = cal.to_global(Vec2{3.2, -1.1});
  CHECK(o.x == doctest::Approx(0.0));
  CHECK(o.y == doctest::Approx(0.0));
}

TEST_CASE("calibration: degenerate markers are refused") {
  CHECK_THROWS_AS(calibrate_frame({0, 0}, {1, 0}, {2, 0}), DegenerateFrame);
  CHECK_THROWS_AS(calibrate_frame({1, 1}, {1, 1}, {0, 1}), DegenerateFrame);
  CHECK_THROWS_AS(calibrate_frame({0, 0}, {1, 1}, {2, 2}), DegenerateFrame);
}

TEST_CASE("calibration: transform round-trips 100 random points to 1e-12") {
  Rng rng(41);
  for (int f = 0; f < 5; ++f) {
    const Vec2 origin{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double ang = rng.uniform(-kPi, kPi);
    const double len = rng.uniform(0.5, 3.0);
    const Vec2 x_pt = origin + Vec2{len * std::cos(ang), len * std::sin(ang)};
    const Vec2 y_pt = origin + Vec2{-len * std::sin(ang), len * std::cos(ang)};
    const FrameCalibration cal = calibrate_frame(origin, x_pt, y_pt);
    for (int i = 0; i < 100; ++i) {
      const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const Vec2 back = cal.to_raw(cal.to_global(p));
      CHECK(std::abs(back.x - p.x) < 1e-12);
      CHECK(std::abs(back.y - p.y) < 1e-12);
    }
  }
}

TEST_CASE("observation: zero noise reports ground truth exactly") {
  WorldState w = static_world({1.2, 0.9, 0.7});
  TrackingParams params;
  params.position_sigma_m = 0.0;
  params.heading_sigma_rad = 0.0;
  Rng rng(1);
  const auto reports = observe_poses(w, params, 3.5, rng);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].robot_id == "r1");
  CHECK(reports[0].pose.x_m == 1.2);
  CHECK(reports[0].pose.y_m == 0.9);
  CHECK(reports[0].pose.theta_rad == 0.7);
  CHECK(reports[0].stamp_s == 3.5);
}

TEST_CASE("observation: default sigma reproduces the 8 mm mean radial error") {
  WorldState w = static_world({1.25, 0.875, 0.0});
  TrackingParams params;  // sigma 0.006383
  Rng rng(2024);
  double radial_sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto reports = observe_poses(w, params, 0.0, rng);
    radial_sum += std::hypot(reports[0].pose.x_m - 1.25,
                             reports[0].pose.y_m - 0.875);
  }
  const double mean_radial = radial_sum / n;
  CHECK(mean_radial > 0.008 * 0.95);
  CHECK(mean_radial < 0.008 * 1.05);
}

TEST_CASE("observation: noise is unbiased over ten thousand samples") {
  WorldState w = static_world({1.0, 1.0, 0.0});
  TrackingParams params;
  Rng rng(7);
  double sx = 0.0, sy = 0.0, sth = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto reports = observe_poses(w, params, 0.0, rng);
    sx += reports[0].pose.x_m - 1.0;
    sy += reports[0].pose.y_m - 1.0;
    sth += reports[0].pose.theta_rad;
  }
  const double bound = 3.0 * params.position_sigma_m / std::sqrt(double(n));
  CHECK(std::abs(sx / n) < bound);
  CHECK(std::abs(sy / n) < bound);
  CHECK(std::abs(sth / n) <
        3.0 * params.heading_sigma_rad / std::sqrt(double(n)));
}

TEST_CASE("observation: reports stay inside bounds plus the 3 sigma margin") {
  WorldState w = static_world({0.05, 0.05, 0.0});
  TrackingParams params;
  params.position_sigma_m = 0.5;  // absurd noise to stress the clamp
  Rng rng(3);
  const double margin = 3.0 * params.position_sigma_m;
  for (int i = 0; i < 2000; ++i) {
    const auto reports = observe_poses(w, params, 0.0, rng);
    CHECK(reports[0].pose.x_m >= -margin);
    CHECK(reports[0].pose.x_m <= w.table_width_m + margin);
    CHECK(reports[0].pose.y_m >= -margin);
    CHECK(reports[0].pose.y_m <= w.table_height_m + margin);
  }
}

TEST_CASE("observation: drop probability removes reports") {
  WorldState w = static_world({1, 1, 0});
  TrackingParams params;
  params.drop_probability = 1.0;
  Rng rng(4);
  CHECK(observe_poses(w, params, 0.0, rng).empty());

  params.drop_probability = 0.5;
  int seen = 0;
  for (int i = 0; i < 10000; ++i)
    seen += static_cast<int>(!observe_poses(w, params, 0.0, rng).empty());
  CHECK(seen > 4700);
  CHECK(seen < 5300);
}

TEST_CASE("stations: single free station is taken") {
  std::vector<ChargingStation> stations{{"s0", 0.5, 0.5, std::nullopt, 2.0}};
  const auto got = assign_charging_station(stations, "r1", {1, 1, 0}, {"r1"});
  REQUIRE(got.has_value());
  CHECK(got->id == "s0");
  CHECK(stations[0].occupied_by == "r1");
}

TEST_CASE("stations: none free means empty-handed") {
  std::vector<ChargingStation> stations{{"s0", 0.5, 0.5, "other", 2.0}};
  CHECK(!assign_charging_station(stations, "r1", {1, 1, 0}, {"r1", "other"})
             .has_value());
}

TEST_CASE("stations: nearest wins regardless of listing order") {
  const Pose2D robot{1.0, 1.0, 0.0};
  std::vector<ChargingStation> fwd{{"s0", 1.3, 1.0, std::nullopt, 2.0},
                                   {"s1", 1.8, 1.0, std::nullopt, 2.0}};
  std::vector<ChargingStation> rev{fwd[1], fwd[0]};
  const auto a = assign_charging_station(fwd, "r1", robot, {"r1"});
  const auto b = assign_charging_station(rev, "r1", robot, {"r1"});
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->id == "s0");  // 0.3 m beats 0.8 m
  CHECK(b->id == "s0");
}

TEST_CASE("stations: exact ties go to the lowest id, order-independent") {
  const Pose2D robot{1.0, 1.0, 0.0};
  std::vector<ChargingStation> base{{"s2", 1.0, 0.5, std::nullopt, 2.0},
                                    {"s1", 1.0, 1.5, std::nullopt, 2.0},
                                    {"s3", 0.5, 1.0, std::nullopt, 2.0}};
  std::sort(base.begin(), base.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  do {
    std::vector<ChargingStation> stations = base;
    const auto got = assign_charging_station(stations, "r1", robot, {"r1"});
    REQUIRE(got.has_value());
    CHECK(got->id == "s1");
  } while (std::next_permutation(
      base.begin(), base.end(),
      [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST_CASE("stations: repeat request returns the held station") {
  std::vector<ChargingStation> stations{{"s0", 0.2, 0.2, std::nullopt, 2.0},
                                        {"s1", 1.9, 1.0, std::nullopt, 2.0}};
  const auto first = assign_charging_station(stations, "r1", {2, 1, 0}, {"r1"});
  REQUIRE(first.has_value());
  CHECK(first->id == "s1");
  // the robot moved next to s0, but it still holds s1
  const auto again =
      assign_charging_station(stations, "r1", {0.2, 0.2, 0}, {"r1"});
  REQUIRE(again.has_value());
  CHECK(again->id == "s1");
  CHECK(!stations[0].occupied_by.has_value());
}

TEST_CASE("stations: unknown robots are turned away") {
  std::vector<ChargingStation> stations{{"s0", 0.5, 0.5, std::nullopt, 2.0}};
  CHECK_THROWS_AS(
      assign_charging_station(stations, "ghost", {1, 1, 0}, {"r1"}),
      InvalidRequest);
}

TEST_CASE("stations: release frees exactly the holder's slot") {
  std::vector<ChargingStation> stations{{"s0", 0.5, 0.5, "r1", 2.0},
                                        {"s1", 1.0, 1.0, "r2", 2.0}};
  CHECK(release_charging_station(stations, "r1"));
  CHECK(!stations[0].occupied_by.has_value());
  CHECK(stations[1].occupied_by == "r2");
  CHECK(!release_charging_station(stations, "r1"));  // nothing held now
}

TEST_CASE("stations: exclusivity survives an assignment storm") {
  Rng rng(55);
  std::vector<ChargingStation> stations{{"s0", 0.3, 0.3, std::nullopt, 2.0},
                                        {"s1", 2.2, 0.3, std::nullopt, 2.0},
                                        {"s2", 1.25, 1.5, std::nullopt, 2.0}};
  const std::set<std::string> robots{"r0", "r1", "r2", "r3", "r4"};
  for (int i = 0; i < 500; ++i) {
    const std::string id = "r" + std::to_string(rng.uniform_int(0, 4));
    if (rng.uniform01() < 0.6) {
      const Pose2D pose{rng.uniform(0.1, 2.4), rng.uniform(0.1, 1.6), 0.0};
      (void)assign_charging_station(stations, id, pose, robots);
    } else {
      (void)release_charging_station(stations, id);
    }
    // each robot holds at most one station
    std::set<std::string> holders;
    for (const auto& st : stations) {
      if (!st.occupied_by) continue;
      CHECK(!holders.count(*st.occupied_by));
      holders.insert(*st.occupied_by);
    }
  }
}

TEST_CASE("camera task: exactly the configured frames per second") {
  TrackingParams params;  // 30 Hz
  params.position_sigma_m = 0.0;
  params.heading_sigma_rad = 0.0;
  TrackingServer server(params, 77);
  WorldState w = static_world({1, 1, 0});

  auto first = server.poll(w);  // t = 0 frame
  REQUIRE(first.size() == 1);
  CHECK(first[0].stamp_s == 0.0);

  int frames_in_second = 0;
  std::vector<double> stamps;
  for (int k = 1; k <= 50; ++k) {  // advance to t = 1.0 in 0.02 steps
    w.sim_time_s = 0.02 * k;
    for (const auto& f : server.poll(w)) {
      ++frames_in_second;
      stamps.push_back(f.stamp_s);
    }
  }
  CHECK(frames_in_second == 30);
  for (size_t i = 0; i < stamps.size(); ++i)
    CHECK(stamps[i] == doctest::Approx((i + 1) / 30.0).epsilon(1e-12));
}

TEST_CASE("camera task: same seed, same world, same bytes") {
  TrackingParams params;
  TrackingServer a(params, 31), b(params, 31);
  WorldState w = static_world({0.7, 0.3, 0.2});
  for (int k = 0; k <= 20; ++k) {
    w.sim_time_s = 0.05 * k;
    const auto fa = a.poll(w);
    const auto fb = b.poll(w);
    REQUIRE(fa.size() == fb.size());
    for (size_t i = 0; i < fa.size(); ++i) {
      REQUIRE(fa[i].reports.size() == fb[i].reports.size());
      for (size_t j = 0; j < fa[i].reports.size(); ++j) {
        CHECK(fa[i].reports[j].pose.x_m == fb[i].reports[j].pose.x_m);
        CHECK(fa[i].reports[j].pose.y_m == fb[i].reports[j].pose.y_m);
        CHECK(fa[i].reports[j].pose.theta_rad ==
              fb[i].reports[j].pose.theta_rad);
      }
    }
  }
}

TEST_CASE("camera task: non-positive rate is refused") {
  TrackingParams params;
  params.rate_hz = 0.0;
  CHECK_THROWS_AS(TrackingServer(params, 1), InvalidInput);
}
