#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "floatgnc/platform.hpp"
#include "floatgnc/trajectory.hpp"

using namespace floatgnc;

namespace {

Trajectory random_trajectory(int n_knots, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> sdist(-2.0, 2.0);
  std::uniform_real_distribution<double> fdist(0.0, 10.0);
  Trajectory traj;
  traj.knots.resize(n_knots);
  const double dt = 0.25;
  for (int k = 0; k < n_knots; ++k) {
    traj.knots[k].t = k * dt;
    for (int i = 0; i < kStateDim; ++i) traj.knots[k].state[i] = sdist(gen);
    traj.knots[k].control[kTau] = 0.1 * sdist(gen);
    for (int i = 0; i < kNumThrusters; ++i) traj.knots[k].control[kF0 + i] = fdist(gen);
  }
  return traj;
}

}  // namespace

namespace {

std::string to_text(const Trajectory& traj) {
  std::ostringstream out;
  write_trajectory(out, traj);
  return out.str();
}

Trajectory from_text(const std::string& text) {
  std::istringstream in(text);
  return read_trajectory(in);
}

}  // namespace

TEST_CASE("text round trip is exact") {
  const Trajectory traj = random_trajectory(40, 123);
  const std::string text = to_text(traj);
  const Trajectory back = from_text(text);
  REQUIRE(back.num_knots() == traj.num_knots());
  for (int k = 0; k < traj.num_knots(); ++k) {
    CHECK(back.knots[k].t == traj.knots[k].t);
    CHECK((back.knots[k].state - traj.knots[k].state).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.knots[k].control - traj.knots[k].control).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK(to_text(back) == text);
}

TEST_CASE("file round trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "floatgnc_traj_test.traj";
  const Trajectory traj = random_trajectory(12, 5);
  write_trajectory_file(path.string(), traj);
  const Trajectory back = read_trajectory_file(path.string());
  CHECK(to_text(back) == to_text(traj));
  fs::remove(path);
}

TEST_CASE("parse rejects malformed input") {
  const Trajectory traj = random_trajectory(5, 9);
  std::string text = to_text(traj);

  SUBCASE("wrong header") {
    std::string bad = text;
    bad.replace(bad.find("theta"), 5, "THETA");
    CHECK_THROWS_AS(from_text(bad), std::runtime_error);
  }
  SUBCASE("short row") {
    std::string bad = text;
    bad.resize(bad.find_last_of('\n', bad.size() - 2) + 4);
    bad += "\n";
    CHECK_THROWS_AS(from_text(bad), std::runtime_error);
  }
  SUBCASE("empty") { CHECK_THROWS_AS(from_text(""), std::runtime_error); }
}

TEST_CASE("grid validation enforces uniform spacing from zero") {
  Trajectory traj = random_trajectory(6, 2);
  CHECK_NOTHROW(traj.validate_grid());

  SUBCASE("nonzero start") {
    traj.knots[0].t = 0.5;
    CHECK_THROWS_AS(traj.validate_grid(), std::runtime_error);
  }
  SUBCASE("uneven spacing") {
    traj.knots[3].t += 1e-3;
    CHECK_THROWS_AS(traj.validate_grid(), std::runtime_error);
  }
  SUBCASE("non-finite state") {
    traj.knots[2].state[kVx] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(traj.validate_grid(), std::runtime_error);
  }
}

TEST_CASE("state interpolation passes through knots and clamps outside") {
  PlatformParams p;
  const Trajectory traj = random_trajectory(8, 77);
  for (int k = 0; k < traj.num_knots(); ++k) {
    const State7 s = traj.state_at(traj.knots[k].t, p);
    CHECK((s - traj.knots[k].state).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  CHECK((traj.state_at(-5.0, p) - traj.knots.front().state).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((traj.state_at(1e6, p) - traj.knots.back().state).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("state interpolation reproduces a constant-acceleration arc") {
  // +x thruster pair held on: closed-form quadratic position, linear velocity.
  PlatformParams p;
  Control9 u = Control9::Zero();
  u[kF0 + 3] = 10.0;
  u[kF0 + 6] = 10.0;
  const double a = 20.0 / p.mass;

  Trajectory traj;
  traj.knots.resize(11);
  const double dt = 0.5;
  for (int k = 0; k <= 10; ++k) {
    const double t = k * dt;
    Knot& knot = traj.knots[k];
    knot.t = t;
    knot.state.setZero();
    knot.state[kX] = 0.5 * a * t * t;
    knot.state[kVx] = a * t;
    knot.control = u;
  }
  for (double t = 0.05; t < 5.0; t += 0.173) {
    const State7 s = traj.state_at(t, p);
    CHECK(s[kX] == doctest::Approx(0.5 * a * t * t).epsilon(1e-10));
    CHECK(s[kVx] == doctest::Approx(a * t).epsilon(1e-10));
  }
}

TEST_CASE("control interpolation is piecewise linear") {
  const Trajectory traj = random_trajectory(6, 3);
  const double dt = traj.knots[1].t - traj.knots[0].t;
  for (int k = 0; k + 1 < traj.num_knots(); ++k) {
    const double tm = traj.knots[k].t + 0.5 * dt;
    const Control9 expect = 0.5 * (traj.knots[k].control + traj.knots[k + 1].control);
    CHECK((traj.control_at(tm) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  CHECK((traj.control_at(-1.0) - traj.knots.front().control).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((traj.control_at(99.0) - traj.knots.back().control).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("hold_at is a single-knot stationary trajectory") {
  PlatformParams p;
  State7 x = State7::Zero();
  x[kX] = 1.0;
  x[kTheta] = 0.7;
  const Trajectory traj = Trajectory::hold_at(x);
  REQUIRE(traj.num_knots() == 1);
  CHECK(traj.knots.front().t == 0.0);
  CHECK(traj.final_time() == 0.0);
  CHECK((traj.knots.front().state - x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(traj.knots.front().control.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_NOTHROW(traj.validate_grid());
  // Interpolation holds the state at any query time.
  CHECK((traj.state_at(3.0, p) - x).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(traj.control_at(3.0).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("hash is stable per content and sensitive to changes") {
  const Trajectory a = random_trajectory(10, 42);
  Trajectory b = random_trajectory(10, 42);
  CHECK(trajectory_hash(a) == trajectory_hash(b));
  b.knots[4].state[kY] += 1e-12;
  CHECK(trajectory_hash(a) != trajectory_hash(b));
}
