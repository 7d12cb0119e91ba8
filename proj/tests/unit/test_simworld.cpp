#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "floatgnc/metrics.hpp"
#include "floatgnc/simworld.hpp"

using namespace floatgnc;

namespace {

constexpr double kDt = 1e-3;

std::array<bool, kNumThrusters> no_valves() { return {}; }

// Stabilization-style scenario: start offset from the origin, noisy sensors,
// a hard disturbance kick early on.
EpisodeSetup disturbed_setup(double duration, std::uint64_t seed) {
  EpisodeSetup setup;
  setup.sim.duration = duration;
  setup.sim.seed = seed;
  DisturbanceEvent kick;
  kick.start = 1.0;
  kick.duration = 1e-3;
  kick.force = {5000.0, 5000.0};
  kick.torque = 1000.0;
  setup.events.push_back(kick);
  return setup;
}

}  // namespace

TEST_CASE("a resting platform on a flat floor stays exactly put") {
  const Heightmap map = Heightmap::flat(5.0, 5.0, 0.5);
  PlatformParams params;
  State7 x = State7::Zero();
  for (int i = 0; i < 1000; ++i) {
    x = step_plant(x, no_valves(), 0.0, Eigen::Vector2d::Zero(), 0.0, map, params, kDt);
  }
  CHECK(x.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("a millisecond disturbance imparts the hand-computed impulse") {
  const Heightmap map = Heightmap::flat(5.0, 5.0, 0.5);
  PlatformParams params;
  const Eigen::Vector2d force(5000.0, 5000.0);
  const double torque = 1000.0;
  const State7 next =
      step_plant(State7::Zero(), no_valves(), 0.0, force, torque, map, params, kDt);

  const double dvx = force.x() * kDt / params.mass;
  const double dthetadot = torque * kDt / params.body_inertia;
  // Constant acceleration integrates exactly under RK4.
  CHECK(next[kVx] == doctest::Approx(dvx).epsilon(1e-14));
  CHECK(next[kVy] == doctest::Approx(dvx).epsilon(1e-14));
  CHECK(next[kThetaDot] == doctest::Approx(dthetadot).epsilon(1e-14));
  CHECK(next[kX] == doctest::Approx(0.5 * force.x() / params.mass * kDt * kDt));
  CHECK(next[kOmegaRw] == 0.0);
  // The magnitudes the scenario is built around.
  CHECK(dvx == doctest::Approx(0.02256).epsilon(1e-3));
  CHECK(dthetadot == doctest::Approx(0.0818).epsilon(1e-3));
}

TEST_CASE("wheel torquing conserves total angular momentum") {
  const Heightmap map = Heightmap::flat(5.0, 5.0, 0.5);
  PlatformParams params;
  State7 x = State7::Zero();
  x[kThetaDot] = 0.3;
  x[kOmegaRw] = 5.0;
  const double initial = params.body_inertia * x[kThetaDot] + params.wheel_inertia * x[kOmegaRw];

  double tau = 0.0;
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {  // 100 s
    if (k % 10 == 0) {
      const double t = k * kDt;
      tau = 0.15 * std::sin(2.0 * std::numbers::pi * 0.05 * t);
    }
    x = step_plant(x, no_valves(), tau, Eigen::Vector2d::Zero(), 0.0, map, params, kDt);
    const double momentum =
        params.body_inertia * x[kThetaDot] + params.wheel_inertia * x[kOmegaRw];
    worst = std::max(worst, std::abs(momentum - initial));
  }
  CHECK(std::abs(x[kOmegaRw]) < params.wheel_speed_max);  // scenario stayed unsaturated
  CHECK(worst / std::abs(initial) < 1e-6);
}

TEST_CASE("a saturated wheel absorbs no further momentum") {
  const Heightmap map = Heightmap::flat(5.0, 5.0, 0.5);
  PlatformParams params;
  State7 x = State7::Zero();
  x[kOmegaRw] = params.wheel_speed_max;

  const State7 pushed =
      step_plant(x, no_valves(), 0.2, Eigen::Vector2d::Zero(), 0.0, map, params, kDt);
  CHECK(pushed[kOmegaRw] == x[kOmegaRw]);
  CHECK(pushed[kThetaDot] == 0.0);  // no reaction torque either

  const State7 despun =
      step_plant(x, no_valves(), -0.2, Eigen::Vector2d::Zero(), 0.0, map, params, kDt);
  CHECK(despun[kOmegaRw] < x[kOmegaRw]);
  CHECK(despun[kThetaDot] > 0.0);  // despinning torques the body the other way

  // Requests beyond the motor limit behave exactly like the limit.
  const State7 a =
      step_plant(State7::Zero(), no_valves(), 0.5, Eigen::Vector2d::Zero(), 0.0, map, params, kDt);
  const State7 b =
      step_plant(State7::Zero(), no_valves(), 0.2, Eigen::Vector2d::Zero(), 0.0, map, params, kDt);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("measurements are exact at zero variance and reproducible by seed") {
  State7 truth = State7::Zero();
  truth[kX] = 1.5;
  truth[kTheta] = 4.0;  // wraps to 4 - 2 pi
  truth[kOmegaRw] = 3.0;

  Rng quiet(5);
  const Measurement exact = measure(truth, NoiseVariances::zero(), quiet);
  CHECK(exact.x == 1.5);
  CHECK(exact.theta == doctest::Approx(4.0 - 2.0 * std::numbers::pi).epsilon(1e-15));
  CHECK(exact.omega_rw == 3.0);

  NoiseVariances noise;  // defaults
  Rng r1(77), r2(77);
  for (int i = 0; i < 100; ++i) {
    const Measurement a = measure(truth, noise, r1);
    const Measurement b = measure(truth, noise, r2);
    CHECK(a.x == b.x);
    CHECK(a.theta == b.theta);
    CHECK(a.omega_rw == b.omega_rw);
  }

  Rng r3(78);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double e = measure(truth, noise, r3).x - truth[kX];
    sum += e;
    sum_sq += e * e;
  }
  const double variance = (sum_sq - sum * sum / n) / (n - 1);
  CHECK(variance > 0.9e-5);
  CHECK(variance < 1.1e-5);
}

TEST_CASE("an idle regulation episode never fires a thruster") {
  EpisodeSetup setup;
  setup.sim.duration = 60.0;
  setup.sim.noise = NoiseVariances::zero();
  const SimLog log = run_episode(setup);

  REQUIRE(log.ticks.size() == 6000);
  bool any_valve = false;
  double max_cmd = 0.0;
  for (const auto& tick : log.ticks) {
    for (bool v : tick.valves) any_valve = any_valve || v;
    max_cmd = std::max(max_cmd, tick.command.lpNorm<Eigen::Infinity>());
    CHECK(tick.wheel_torque == 0.0);
  }
  CHECK_FALSE(any_valve);
  CHECK(max_cmd == 0.0);
  CHECK(log.final_truth.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("episodes are bitwise deterministic in the seed") {
  const SimLog a = run_episode(disturbed_setup(5.0, 99));
  const SimLog b = run_episode(disturbed_setup(5.0, 99));
  std::ostringstream sa, sb;
  write_simlog(sa, a);
  write_simlog(sb, b);
  CHECK(sa.str() == sb.str());

  const SimLog c = run_episode(disturbed_setup(5.0, 100));
  std::ostringstream sc;
  write_simlog(sc, c);
  CHECK(sa.str() != sc.str());
}

TEST_CASE("valves latch only at the modulator rate") {
  const SimLog log = run_episode(disturbed_setup(20.0, 4));
  REQUIRE(log.ticks.size() == 2000);
  int changes = 0;
  for (size_t k = 1; k < log.ticks.size(); ++k) {
    if (log.ticks[k].valves != log.ticks[k - 1].valves) {
      ++changes;
      CHECK(k % 10 == 0);  // 10 Hz boundaries on the 100 Hz tick grid
    }
  }
  CHECK(changes > 0);  // the kick must have caused some thrusting
}

TEST_CASE("the disturbance flag marks exactly the overlapping ticks") {
  EpisodeSetup setup;
  setup.sim.duration = 1.0;
  setup.sim.noise = NoiseVariances::zero();
  setup.controller_enabled = false;
  DisturbanceEvent kick;
  kick.start = 0.05;
  kick.duration = 1e-3;
  kick.force = {5000.0, 0.0};
  setup.events.push_back(kick);
  const SimLog log = run_episode(setup);

  PlatformParams params;
  for (const auto& tick : log.ticks) {
    CHECK(tick.disturbance_active == (tick.t == 0.05));
  }
  // Velocity before the kick is zero, after it exactly one impulse.
  CHECK(log.ticks[5].truth[kVx] == 0.0);
  const double dv = 5000.0 * kDt / params.mass;
  CHECK(log.ticks[7].truth[kVx] == doctest::Approx(dv).epsilon(1e-14));
  CHECK(log.final_truth[kVx] == doctest::Approx(dv).epsilon(1e-14));
}

TEST_CASE("without control the disturbance sends the platform drifting") {
  EpisodeSetup setup = disturbed_setup(120.0, 12);
  setup.controller_enabled = false;
  setup.events[0].start = 5.0;
  const SimLog log = run_episode(setup);

  const double drift = std::hypot(log.final_truth[kX], log.final_truth[kY]);
  CHECK(drift > 1.5);
  CHECK(std::abs(log.final_truth[kTheta]) > 2.0 * std::numbers::pi);
}

TEST_CASE("regulation with binary thrusters settles into a small limit cycle") {
  EpisodeSetup setup;
  setup.sim.duration = 100.0;
  setup.sim.seed = 21;
  setup.initial_truth[kX] = 0.05;
  const SimLog log = run_episode(setup);

  int crossings = 0;
  bool fired = false;
  double worst = 0.0;
  for (size_t k = 1; k < log.ticks.size(); ++k) {
    const double prev = log.ticks[k - 1].truth[kX];
    const double cur = log.ticks[k].truth[kX];
    if ((prev < 0.0 && cur >= 0.0) || (prev >= 0.0 && cur < 0.0)) ++crossings;
    for (bool v : log.ticks[k].valves) fired = fired || v;
    worst = std::max(worst, std::hypot(log.ticks[k].truth[kX], log.ticks[k].truth[kY]));
  }
  CHECK(fired);
  CHECK(crossings >= 2);
  CHECK(worst < 0.10);
}

TEST_CASE("episode logs round-trip through the text format") {
  const SimLog log = run_episode(disturbed_setup(3.0, 55));
  std::ostringstream first;
  write_simlog(first, log);
  std::istringstream in(first.str());
  const SimLog reread = read_simlog(in);
  std::ostringstream second;
  write_simlog(second, reread);
  CHECK(first.str() == second.str());
  REQUIRE(reread.ticks.size() == log.ticks.size());
  CHECK(reread.config.seed == log.config.seed);
  CHECK(reread.ticks[17].truth == log.ticks[17].truth);
  CHECK(reread.ticks[17].valves == log.ticks[17].valves);
  CHECK(reread.final_truth == log.final_truth);
  REQUIRE(reread.summary.size() == log.summary.size());
  for (size_t i = 0; i < log.summary.size(); ++i) {
    CHECK(reread.summary[i].first == log.summary[i].first);
    CHECK(reread.summary[i].second == log.summary[i].second);
  }
}

TEST_CASE("a spun-up wheel episode runs within limits") {
  EpisodeSetup setup;
  setup.sim.duration = 10.0;
  setup.sim.seed = 31;
  setup.initial_truth[kOmegaRw] = 13.6;  // half the rated speed
  const SimLog log = run_episode(setup);
  PlatformParams params;
  CHECK(std::abs(log.final_truth[kOmegaRw]) <= params.wheel_speed_max);
  CHECK(std::abs(log.final_truth[kOmegaRw] - 13.6) < 2.0);  // barely touched
}

TEST_CASE("misconfigured episodes are rejected") {
  EpisodeSetup setup;
  setup.sim.estimator_hz = 333.0;  // period not a multiple of the plant step
  CHECK_THROWS_AS(run_episode(setup), std::invalid_argument);

  setup = EpisodeSetup{};
  setup.sim.modulator_hz = 30.0;  // not a divisor of the estimator rate
  CHECK_THROWS_AS(run_episode(setup), std::invalid_argument);

  setup = EpisodeSetup{};
  setup.sim.duration = 0.0005;  // shorter than one plant step
  CHECK_THROWS_AS(run_episode(setup), std::invalid_argument);

  setup = EpisodeSetup{};
  setup.events.emplace_back();
  setup.events.back().duration = 0.0;
  CHECK_THROWS_AS(run_episode(setup), std::invalid_argument);

  setup = EpisodeSetup{};
  setup.trajectory.knots.clear();
  CHECK_THROWS_AS(run_episode(setup), std::invalid_argument);
}
