#include "floatgnc/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "floatgnc/config.hpp"

namespace floatgnc {

void DisturbanceEvent::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("disturbance: duration must be positive");
  }
  if (!(start >= 0.0) || !std::isfinite(start)) {
    throw std::invalid_argument("disturbance: start must be non-negative");
  }
  if (!force.allFinite() || !std::isfinite(torque)) {
    throw std::invalid_argument("disturbance: non-finite wrench");
  }
}

NoiseVariances NoiseVariances::zero() {
  NoiseVariances n;
  n.x = n.y = n.theta = n.omega_rw = 0.0;
  return n;
}

void NoiseVariances::validate() const {
  for (double v : {x, y, theta, omega_rw}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("noise variances must be finite and non-negative");
    }
  }
}

namespace {

// Exact integer count of plant steps per period, or -1 if the period is not
// an integer multiple of the step.
int steps_per_period(double rate_hz, double dt) {
  if (!(rate_hz > 0.0) || !(dt > 0.0)) return -1;
  const double period = 1.0 / rate_hz;
  const double ratio = period / dt;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) return -1;
  return static_cast<int>(n);
}

}  // namespace

int SimConfig::plant_steps_per_estimate() const {
  return steps_per_period(estimator_hz, plant_dt);
}

int SimConfig::plant_steps_per_modulation() const {
  return steps_per_period(modulator_hz, plant_dt);
}

long long SimConfig::plant_steps() const { return std::llround(duration / plant_dt); }

void SimConfig::validate() const {
  if (!(plant_dt > 0.0) || !std::isfinite(plant_dt)) {
    throw std::invalid_argument("sim config: plant step must be positive");
  }
  const int spe = plant_steps_per_estimate();
  const int spm = plant_steps_per_modulation();
  if (spe < 1) {
    throw std::invalid_argument(
        "sim config: estimator period must be an integer multiple of the plant step");
  }
  if (spm < 1 || spm % spe != 0) {
    throw std::invalid_argument(
        "sim config: modulator period must be an integer multiple of the estimator period");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("sim config: duration must be positive");
  }
  const long long n = plant_steps();
  if (n < 1 || std::abs(duration - static_cast<double>(n) * plant_dt) > 1e-9) {
    throw std::invalid_argument(
        "sim config: duration must be an integer multiple of the plant step");
  }
  noise.validate();
}

void EpisodeSetup::validate() const {
  params.validate();
  sim.validate();
  map.validate();
  kf.validate();
  modulator.validate();
  tracking.validate();
  regulation.validate();
  for (const auto& ev : events) ev.validate();
  if (trajectory.num_knots() == 0) {
    throw std::invalid_argument("episode: empty reference trajectory");
  }
  if (trajectory.num_knots() >= 2) trajectory.validate_grid();
  if (!initial_truth.allFinite()) {
    throw std::invalid_argument("episode: non-finite initial state");
  }
  if (!(regulation_horizon > 0.0)) {
    throw std::invalid_argument("episode: regulation horizon must be positive");
  }
}

Measurement measure(const State7& truth, const NoiseVariances& noise, Rng& rng) {
  // Fixed draw order keeps the stream layout stable across channels.
  Measurement m;
  m.x = truth[kX] + std::sqrt(noise.x) * rng.gaussian();
  m.y = truth[kY] + std::sqrt(noise.y) * rng.gaussian();
  m.theta = wrap_angle(truth[kTheta] + std::sqrt(noise.theta) * rng.gaussian());
  m.omega_rw = truth[kOmegaRw] + std::sqrt(noise.omega_rw) * rng.gaussian();
  return m;
}

State7 step_plant(const State7& truth, const std::array<bool, kNumThrusters>& valves,
                  double wheel_torque, const Eigen::Vector2d& external_force,
                  double external_torque, const Heightmap& map,
                  const PlatformParams& params, double dt) {
  double tau = std::clamp(wheel_torque, -params.wheel_torque_max, params.wheel_torque_max);
  // A saturated wheel cannot absorb more momentum in its spin direction.
  const double omega = truth[kOmegaRw];
  if ((omega >= params.wheel_speed_max && tau > 0.0) ||
      (omega <= -params.wheel_speed_max && tau < 0.0)) {
    tau = 0.0;
  }

  Control9 u = Control9::Zero();
  u[kTau] = tau;
  for (int i = 0; i < kNumThrusters; ++i) {
    u[kF0 + i] = valves[i] ? params.nominal_thrust : 0.0;
  }

  const auto deriv = [&](const State7& x) {
    State7 d = dynamics(x, u, params);
    const Eigen::Vector2d floor = slope_force({x[kX], x[kY]}, map, params);
    d[kVx] += (floor.x() + external_force.x()) / params.mass;
    d[kVy] += (floor.y() + external_force.y()) / params.mass;
    d[kThetaDot] += external_torque / params.body_inertia;
    return d;
  };

  const State7 k1 = deriv(truth);
  const State7 k2 = deriv(truth + (0.5 * dt) * k1);
  const State7 k3 = deriv(truth + (0.5 * dt) * k2);
  const State7 k4 = deriv(truth + dt * k3);
  State7 next = truth + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  next[kOmegaRw] =
      std::clamp(next[kOmegaRw], -params.wheel_speed_max, params.wheel_speed_max);
  return next;
}

namespace {

Control9 latched_control(const std::array<bool, kNumThrusters>& valves, double tau,
                         const PlatformParams& params) {
  Control9 u = Control9::Zero();
  u[kTau] = tau;
  for (int i = 0; i < kNumThrusters; ++i) {
    u[kF0 + i] = valves[i] ? params.nominal_thrust : 0.0;
  }
  return u;
}

}  // namespace

SimLog run_episode(const EpisodeSetup& setup) {
  setup.validate();
  const SimConfig& sim = setup.sim;
  const PlatformParams& params = setup.params;
  const Trajectory& traj = setup.trajectory;

  const bool track = traj.num_knots() >= 2 && traj.final_time() > 0.0;
  GainSchedule tracking_schedule;
  if (track && setup.controller_enabled) {
    tracking_schedule = riccati_backward(traj, setup.tracking, params, setup.riccati);
  }

  State7 target = traj.knots.back().state;
  target[kVx] = 0.0;
  target[kVy] = 0.0;
  target[kThetaDot] = 0.0;

  // Past the plan (or for a bare pose target) the loop holds position with a
  // converged regulation gain unless the caller wants the tracking schedule's
  // terminal entry held instead.
  const bool regulate =
      setup.controller_enabled && (setup.regulate_after_plan || !track);
  GainSchedule regulation_schedule;
  if (regulate) {
    regulation_schedule = regulation_gains(target, setup.regulation, params,
                                           setup.regulation_horizon, setup.riccati);
  }

  const int spe = sim.plant_steps_per_estimate();
  const int spm = sim.plant_steps_per_modulation();
  const long long n_steps = sim.plant_steps();
  const double est_dt = 1.0 / sim.estimator_hz;

  Rng rng(sim.seed);
  Observer observer(setup.kf, params);
  SigmaDeltaModulator modulator(setup.modulator);

  State7 truth = setup.initial_truth;
  std::array<bool, kNumThrusters> valves{};
  double tau_applied = 0.0;
  Control9 cmd = Control9::Zero();

  SimLog log;
  log.config = sim;
  log.ticks.reserve(static_cast<size_t>(n_steps / spe) + 1);

  for (long long k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * sim.plant_dt;
    const long long tick_index = k / spe;

    if (k % spe == 0) {
      const Measurement m = measure(truth, sim.noise, rng);
      UpdateReport report;
      try {
        if (!observer.initialized()) {
          observer.initialize(m);
        } else {
          observer.predict(latched_control(valves, tau_applied, params), est_dt);
          report = observer.update(m);
        }
      } catch (const std::exception& e) {
        throw ContractViolation("estimator failed at tick " +
                                std::to_string(tick_index) + ": " + e.what());
      }
      const Estimate est = observer.estimate();

      if (!setup.controller_enabled) {
        cmd = Control9::Zero();
      } else if (track && t < traj.final_time()) {
        cmd = feedback(tracking_schedule, t, est.mean);
      } else if (regulate) {
        cmd = feedback(regulation_schedule, 0.0, est.mean);
      } else {
        cmd = feedback(tracking_schedule, t, est.mean);  // holds the last entry
      }
      tau_applied =
          std::clamp(cmd[kTau], -params.wheel_torque_max, params.wheel_torque_max);

      if (k % spm == 0) {
        Thrust8 demand;
        for (int i = 0; i < kNumThrusters; ++i) {
          demand[i] = std::clamp(cmd[kF0 + i], 0.0, setup.modulator.nominal_force);
        }
        try {
          valves = modulator.step(demand);
        } catch (const std::exception& e) {
          throw ContractViolation("modulator rejected demand at tick " +
                                  std::to_string(tick_index) + ": " + e.what());
        }
      }

      SimTick tick;
      tick.t = t;
      tick.truth = truth;
      tick.reference =
          (track && t <= traj.final_time()) ? traj.state_at(t, params) : target;
      tick.estimate = est.mean;
      tick.cov_diag = est.covariance().diagonal();
      tick.command = cmd;
      tick.valves = valves;
      tick.wheel_torque = tau_applied;
      bool on_map = true;
      tick.slope = slope_force({truth[kX], truth[kY]}, setup.map, params, &on_map);
      tick.on_map = on_map;
      tick.update = report;
      log.ticks.push_back(tick);
    }

    // Testing the step midpoint keeps boundary rounding from smearing an
    // event across an extra step.
    const double t_mid = t + 0.5 * sim.plant_dt;
    Eigen::Vector2d external_force = Eigen::Vector2d::Zero();
    double external_torque = 0.0;
    bool step_disturbed = false;
    for (const auto& ev : setup.events) {
      if (ev.active(t_mid)) {
        external_force += ev.force;
        external_torque += ev.torque;
        step_disturbed = true;
      }
    }
    if (step_disturbed) log.ticks.back().disturbance_active = true;
    truth = step_plant(truth, valves, tau_applied, external_force, external_torque,
                       setup.map, params, sim.plant_dt);
    if (!truth.allFinite()) {
      throw ContractViolation("non-finite plant state after tick " +
                              std::to_string(tick_index));
    }
  }
  log.final_truth = truth;

  double on_time_total = 0.0;
  std::array<double, kNumThrusters> on_time{};
  double max_pos_err = 0.0;
  double max_heading_err = 0.0;
  for (const auto& tick : log.ticks) {
    for (int i = 0; i < kNumThrusters; ++i) {
      if (tick.valves[i]) {
        on_time[i] += est_dt;
        on_time_total += est_dt;
      }
    }
    const double ex = tick.truth[kX] - tick.reference[kX];
    const double ey = tick.truth[kY] - tick.reference[kY];
    max_pos_err = std::max(max_pos_err, std::hypot(ex, ey));
    max_heading_err = std::max(
        max_heading_err,
        std::abs(wrap_angle(tick.truth[kTheta] - tick.reference[kTheta])));
  }
  log.summary.emplace_back("ticks", static_cast<double>(log.ticks.size()));
  log.summary.emplace_back("duration", sim.duration);
  const char* names[kStateDim] = {"x", "y", "theta", "vx", "vy", "thetadot", "omega_rw"};
  for (int i = 0; i < kStateDim; ++i) {
    log.summary.emplace_back(std::string("final_") + names[i], log.final_truth[i]);
  }
  for (int i = 0; i < kNumThrusters; ++i) {
    log.summary.emplace_back("thruster_" + std::to_string(i) + "_on_time", on_time[i]);
  }
  log.summary.emplace_back("total_on_time", on_time_total);
  log.summary.emplace_back("max_position_error", max_pos_err);
  log.summary.emplace_back("max_heading_error", max_heading_err);
  return log;
}

namespace {

constexpr char kLogMagic[] = "floatgnc-simlog-v1";

const char* const kColumnNames =
    "t "
    "truth_x truth_y truth_theta truth_vx truth_vy truth_thetadot truth_omega "
    "ref_x ref_y ref_theta ref_vx ref_vy ref_thetadot ref_omega "
    "est_x est_y est_theta est_vx est_vy est_thetadot est_omega "
    "cov_x cov_y cov_theta cov_vx cov_vy cov_thetadot cov_omega "
    "cmd_tau cmd_f0 cmd_f1 cmd_f2 cmd_f3 cmd_f4 cmd_f5 cmd_f6 cmd_f7 "
    "valve_0 valve_1 valve_2 valve_3 valve_4 valve_5 valve_6 valve_7 "
    "wheel_torque slope_fx slope_fy disturbance on_map "
    "innov_x innov_y innov_theta innov_omega "
    "used_x used_y used_theta used_omega";

void expect_word(std::istream& in, const char* word) {
  std::string got;
  if (!(in >> got) || got != word) {
    throw std::runtime_error("simlog: expected '" + std::string(word) + "', got '" +
                             got + "'");
  }
}

double read_double(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error(std::string("simlog: missing ") + what);
  try {
    size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("simlog: bad number '" + token + "' for " + what);
  }
}

bool read_bool(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error(std::string("simlog: missing ") + what);
  if (token == "0") return false;
  if (token == "1") return true;
  throw std::runtime_error("simlog: bad flag '" + token + "' for " + what);
}

}  // namespace

void write_simlog(std::ostream& out, const SimLog& log) {
  out << kLogMagic << "\n";
  out << "plant_dt " << format_double(log.config.plant_dt) << "\n";
  out << "estimator_hz " << format_double(log.config.estimator_hz) << "\n";
  out << "modulator_hz " << format_double(log.config.modulator_hz) << "\n";
  out << "duration " << format_double(log.config.duration) << "\n";
  out << "seed " << log.config.seed << "\n";
  out << "noise_var " << format_double(log.config.noise.x) << " "
      << format_double(log.config.noise.y) << " "
      << format_double(log.config.noise.theta) << " "
      << format_double(log.config.noise.omega_rw) << "\n";
  out << "ticks " << log.ticks.size() << "\n";
  out << "columns " << kColumnNames << "\n";
  for (const auto& tick : log.ticks) {
    out << format_double(tick.t);
    for (int i = 0; i < kStateDim; ++i) out << " " << format_double(tick.truth[i]);
    for (int i = 0; i < kStateDim; ++i) out << " " << format_double(tick.reference[i]);
    for (int i = 0; i < kStateDim; ++i) out << " " << format_double(tick.estimate[i]);
    for (int i = 0; i < kStateDim; ++i) out << " " << format_double(tick.cov_diag[i]);
    for (int i = 0; i < kControlDim; ++i) out << " " << format_double(tick.command[i]);
    for (int i = 0; i < kNumThrusters; ++i) out << " " << (tick.valves[i] ? 1 : 0);
    out << " " << format_double(tick.wheel_torque);
    out << " " << format_double(tick.slope.x()) << " " << format_double(tick.slope.y());
    out << " " << (tick.disturbance_active ? 1 : 0);
    out << " " << (tick.on_map ? 1 : 0);
    out << " " << format_double(tick.update.x_innovation) << " "
        << format_double(tick.update.y_innovation) << " "
        << format_double(tick.update.theta_innovation) << " "
        << format_double(tick.update.omega_innovation);
    out << " " << (tick.update.x_used ? 1 : 0) << " " << (tick.update.y_used ? 1 : 0)
        << " " << (tick.update.theta_used ? 1 : 0) << " "
        << (tick.update.omega_used ? 1 : 0);
    out << "\n";
  }
  out << "final_truth";
  for (int i = 0; i < kStateDim; ++i) out << " " << format_double(log.final_truth[i]);
  out << "\n";
  out << "summary " << log.summary.size() << "\n";
  for (const auto& [key, value] : log.summary) {
    out << key << " " << format_double(value) << "\n";
  }
}

void write_simlog_file(const std::string& path, const SimLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("simlog: cannot open " + path + " for writing");
  write_simlog(out, log);
  if (!out) throw std::runtime_error("simlog: write to " + path + " failed");
}

SimLog read_simlog(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != kLogMagic) {
    throw std::runtime_error("simlog: bad magic");
  }
  SimLog log;
  expect_word(in, "plant_dt");
  log.config.plant_dt = read_double(in, "plant_dt");
  expect_word(in, "estimator_hz");
  log.config.estimator_hz = read_double(in, "estimator_hz");
  expect_word(in, "modulator_hz");
  log.config.modulator_hz = read_double(in, "modulator_hz");
  expect_word(in, "duration");
  log.config.duration = read_double(in, "duration");
  expect_word(in, "seed");
  if (!(in >> log.config.seed)) throw std::runtime_error("simlog: bad seed");
  expect_word(in, "noise_var");
  log.config.noise.x = read_double(in, "noise x");
  log.config.noise.y = read_double(in, "noise y");
  log.config.noise.theta = read_double(in, "noise theta");
  log.config.noise.omega_rw = read_double(in, "noise omega");
  expect_word(in, "ticks");
  long long n_ticks = 0;
  if (!(in >> n_ticks) || n_ticks < 0) throw std::runtime_error("simlog: bad tick count");
  expect_word(in, "columns");
  {
    std::string header_rest;
    std::getline(in, header_rest);
    const std::string expected = std::string(" ") + kColumnNames;
    if (header_rest != expected) {
      throw std::runtime_error("simlog: unexpected column layout");
    }
  }
  log.ticks.resize(static_cast<size_t>(n_ticks));
  for (auto& tick : log.ticks) {
    tick.t = read_double(in, "t");
    for (int i = 0; i < kStateDim; ++i) tick.truth[i] = read_double(in, "truth");
    for (int i = 0; i < kStateDim; ++i) tick.reference[i] = read_double(in, "ref");
    for (int i = 0; i < kStateDim; ++i) tick.estimate[i] = read_double(in, "est");
    for (int i = 0; i < kStateDim; ++i) tick.cov_diag[i] = read_double(in, "cov");
    for (int i = 0; i < kControlDim; ++i) tick.command[i] = read_double(in, "cmd");
    for (int i = 0; i < kNumThrusters; ++i) tick.valves[i] = read_bool(in, "valve");
    tick.wheel_torque = read_double(in, "wheel_torque");
    tick.slope.x() = read_double(in, "slope_fx");
    tick.slope.y() = read_double(in, "slope_fy");
    tick.disturbance_active = read_bool(in, "disturbance");
    tick.on_map = read_bool(in, "on_map");
    tick.update.x_innovation = read_double(in, "innov_x");
    tick.update.y_innovation = read_double(in, "innov_y");
    tick.update.theta_innovation = read_double(in, "innov_theta");
    tick.update.omega_innovation = read_double(in, "innov_omega");
    tick.update.x_used = read_bool(in, "used_x");
    tick.update.y_used = read_bool(in, "used_y");
    tick.update.theta_used = read_bool(in, "used_theta");
    tick.update.omega_used = read_bool(in, "used_omega");
  }
  expect_word(in, "final_truth");
  for (int i = 0; i < kStateDim; ++i) log.final_truth[i] = read_double(in, "final");
  expect_word(in, "summary");
  long long n_summary = 0;
  if (!(in >> n_summary) || n_summary < 0) {
    throw std::runtime_error("simlog: bad summary count");
  }
  log.summary.reserve(static_cast<size_t>(n_summary));
  for (long long i = 0; i < n_summary; ++i) {
    std::string key;
    if (!(in >> key)) throw std::runtime_error("simlog: missing summary key");
    const double value = read_double(in, key.c_str());
    log.summary.emplace_back(key, value);
  }
  return log;
}

SimLog read_simlog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("simlog: cannot open " + path);
  return read_simlog(in);
}

}  // namespace floatgnc
