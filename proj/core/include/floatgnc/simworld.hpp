#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "floatgnc/estimator.hpp"
#include "floatgnc/heightmap.hpp"
#include "floatgnc/platform.hpp"
#include "floatgnc/rng.hpp"
#include "floatgnc/sigma_delta.hpp"
#include "floatgnc/trajectory.hpp"
#include "floatgnc/tvlqr.hpp"

namespace floatgnc {

/// A world-frame wrench applied over a time window (impulsive disturbances
/// are expressed as large wrenches over one integrator step).
struct DisturbanceEvent {
  double start = 0.0;     // s
  double duration = 1e-3; // s
  Eigen::Vector2d force = Eigen::Vector2d::Zero();  // N, world frame
  double torque = 0.0;    // N m

  bool active(double t) const { return t >= start && t < start + duration; }
  void validate() const;  // throws std::invalid_argument
};

/// Sensor noise variances (squared units) of the pose + wheel measurements.
struct NoiseVariances {
  double x = 1e-5;        // m^2
  double y = 1e-5;        // m^2
  double theta = 1e-5;    // rad^2
  double omega_rw = 1e-4; // (rad/s)^2

  static NoiseVariances zero();
  void validate() const;
};

/// Episode timing and noise. The plant integrates at plant_dt; the observer
/// and wheel torque run at estimator_hz; thruster demands are modulated and
/// valves latched at modulator_hz. Both control periods must be integer
/// multiples of the plant step and the modulator period a multiple of the
/// estimator period.
struct SimConfig {
  double plant_dt = 1e-3;      // s
  double estimator_hz = 100.0; // state estimate + torque rate
  double modulator_hz = 10.0;  // valve latch rate
  double duration = 120.0;     // s
  NoiseVariances noise;
  std::uint64_t seed = 0;

  int plant_steps_per_estimate() const;
  int plant_steps_per_modulation() const;
  long long plant_steps() const;
  void validate() const;  // throws std::invalid_argument
};

/// One 100 Hz executive tick of a simulated episode. Latched values (valves,
/// wheel torque) are the ones active over [t, t + estimator period).
struct SimTick {
  double t = 0.0;
  State7 truth = State7::Zero();
  State7 reference = State7::Zero();  // tracked reference; hold target past t_f
  State7 estimate = State7::Zero();
  Eigen::Matrix<double, 7, 1> cov_diag = Eigen::Matrix<double, 7, 1>::Zero();
  Control9 command = Control9::Zero();  // continuous feedback output, pre-clamp
  std::array<bool, kNumThrusters> valves{};
  double wheel_torque = 0.0;  // clamped torque applied this tick
  Eigen::Vector2d slope = Eigen::Vector2d::Zero();  // floor force at truth, N
  bool disturbance_active = false;  // any event overlaps this tick's window
  bool on_map = true;
  UpdateReport update;
};

struct SimLog {
  SimConfig config;
  std::vector<SimTick> ticks;
  State7 final_truth = State7::Zero();  // truth at t = duration
  std::vector<std::pair<std::string, double>> summary;

  double estimator_period() const { return 1.0 / config.estimator_hz; }
};

/// An episode aborted because a module broke its contract mid-run; the
/// message names the offending tick.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Everything one closed-loop episode needs. A trajectory with a positive
/// final time is tracked with `tracking` weights until it ends; afterwards
/// (or from the start, for a single-knot target) the loop regulates about the
/// trajectory's final pose with `regulation` weights. Setting
/// regulate_after_plan = false keeps the tracking schedule's terminal entry
/// active past the end instead.
struct EpisodeSetup {
  Trajectory trajectory = Trajectory::hold_at(State7::Zero());
  State7 initial_truth = State7::Zero();
  PlatformParams params;
  SimConfig sim;
  Heightmap map = Heightmap::flat(6.0, 8.0, 0.5);
  std::vector<DisturbanceEvent> events;
  TvlqrWeights tracking = TvlqrWeights::simulation_tracking();
  TvlqrWeights regulation = TvlqrWeights::simulation_station_keeping();
  RiccatiOptions riccati;
  KfConfig kf = KfConfig::defaults();
  SigmaDeltaConfig modulator;
  bool controller_enabled = true;
  bool regulate_after_plan = true;
  double regulation_horizon = 120.0;  // backward DRE horizon for the hold gain

  void validate() const;  // throws std::invalid_argument
};

/// Draws one noisy pose + wheel measurement; heading is wrapped. The draw
/// order (x, y, theta, omega) is fixed so streams reproduce bit for bit.
Measurement measure(const State7& truth, const NoiseVariances& noise, Rng& rng);

/// Advances the truth one integrator step. Valve forces are binary (0 or the
/// nominal thrust), the wheel torque is clamped to the motor limit and zeroed
/// when it would push the wheel past its speed limit, and the floor slope
/// force plus the external wrench act on the translational / rotational
/// accelerations. RK4.
State7 step_plant(const State7& truth, const std::array<bool, kNumThrusters>& valves,
                  double wheel_torque, const Eigen::Vector2d& external_force,
                  double external_torque, const Heightmap& map,
                  const PlatformParams& params, double dt);

/// Runs the full closed-loop executive: every estimator tick measure,
/// estimate, evaluate the feedback and latch the wheel torque; every
/// modulator tick clamp the thruster demand to [0, f_nom], modulate and latch
/// the valves; integrate the plant at plant_dt throughout. Deterministic in
/// the configured seed. Throws ContractViolation (with the tick index) if a
/// module rejects its input or the state leaves the finite range.
SimLog run_episode(const EpisodeSetup& setup);

/// Columnar text serialization (one row per executive tick) plus the summary
/// key-values; documented by the header line inside the file itself.
void write_simlog(std::ostream& out, const SimLog& log);
void write_simlog_file(const std::string& path, const SimLog& log);
SimLog read_simlog(std::istream& in);           // throws std::runtime_error
SimLog read_simlog_file(const std::string& path);

}  // namespace floatgnc
