#include "floatgnc/planner.hpp"

#include <algorithm>
#include <cmath>

namespace floatgnc {

void PlanOptions::validate() const {
  if (n_knots < 2) throw std::invalid_argument("PlanOptions: n_knots must be >= 2");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("PlanOptions: alpha must be >= 1");
  }
  fuel_weights.validate();
}

double fuel_cost_of(const Trajectory& traj, const FuelWeights& weights) {
  weights.validate();
  double j = 0.0;
  for (const auto& k : traj.knots) {
    j += (weights.r_diag.array() * k.control.array().square()).sum();
  }
  return j;
}

double bang_bang_time_heuristic(const BoundarySpec& boundary,
                                const PlatformParams& params) {
  auto bang_time = [](double dist, double accel, double vmax) {
    if (dist <= 0.0) return 0.0;
    const double v_peak = std::sqrt(dist * accel);
    if (v_peak <= vmax) return 2.0 * std::sqrt(dist / accel);
    return dist / vmax + vmax / accel;
  };

  const double a_lin = 2.0 * params.nominal_thrust / params.mass;
  const double dist = std::hypot(boundary.x_final[kX] - boundary.x_init[kX],
                                 boundary.x_final[kY] - boundary.x_init[kY]);
  const double vmax =
      std::min(std::abs(boundary.state_upper[kVx]), std::abs(boundary.state_upper[kVy]));

  const double a_rot =
      2.0 * params.thruster_arm * params.nominal_thrust / params.body_inertia;
  const double dth = std::abs(boundary.x_final[kTheta] - boundary.x_init[kTheta]);
  const double wmax = std::abs(boundary.state_upper[kThetaDot]);

  return std::max({bang_time(dist, a_lin, vmax), bang_time(dth, a_rot, wmax), 1.0});
}

TrajectoryCheck check_trajectory(const Trajectory& traj,
                                 const BoundarySpec& boundary,
                                 const PlatformParams& params) {
  traj.validate_grid();
  TrajectoryCheck r;
  const double dt = traj.dt();
  for (int k = 0; k + 1 < traj.num_knots(); ++k) {
    const auto defect =
        hermite_simpson_defect(traj.knots[k], traj.knots[k + 1], dt, params);
    r.max_defect = std::max(r.max_defect, defect.lpNorm<Eigen::Infinity>());
  }
  for (const auto& knot : traj.knots) {
    for (int i = 0; i < kStateDim; ++i) {
      r.max_bound_violation =
          std::max({r.max_bound_violation, boundary.state_lower[i] - knot.state[i],
                    knot.state[i] - boundary.state_upper[i]});
    }
    for (int i = 0; i < kControlDim; ++i) {
      r.max_bound_violation =
          std::max({r.max_bound_violation, boundary.control_lower[i] - knot.control[i],
                    knot.control[i] - boundary.control_upper[i]});
    }
  }
  r.max_bound_violation = std::max(r.max_bound_violation, 0.0);
  r.boundary_residual =
      std::max((traj.knots.front().state - boundary.x_init).lpNorm<Eigen::Infinity>(),
               (traj.knots.back().state - boundary.x_final).lpNorm<Eigen::Infinity>());
  return r;
}

namespace {

Trajectory rescale_in_time(const Trajectory& traj, double alpha) {
  Trajectory out = traj;
  const double inv = 1.0 / alpha;
  for (auto& k : out.knots) {
    k.t *= alpha;
    k.state[kVx] *= inv;
    k.state[kVy] *= inv;
    k.state[kThetaDot] *= inv;
    k.state[kOmegaRw] *= inv;
    k.control *= inv * inv;
  }
  return out;
}

}  // namespace

PlanResult plan_two_phase(const PlatformParams& params, const BoundarySpec& boundary,
                          const PlanOptions& options) {
  params.validate();
  boundary.validate();
  options.validate();

  PlanResult result;

  if ((boundary.x_init - boundary.x_final).lpNorm<Eigen::Infinity>() == 0.0) {
    // Nothing to move: a zero-duration single-knot trajectory.
    result.degenerate = true;
    result.trajectory = Trajectory::hold_at(boundary.x_init);
    result.time_optimal = result.trajectory;
    return result;
  }

  // Phase 1: minimum time, t_f free. The bang-bang heuristic is an
  // axis-decoupled ballpark; the true minimum can undercut it (the thruster
  // pairs combine across axes) but not by more than a small factor, so a third
  // of it is a safe hard floor. Without the floor the linear time objective
  // dives to a degenerate t_f before the penalty builds up, and digging out of
  // that corner costs most of the iteration budget.
  const double tf_guess = bang_bang_time_heuristic(boundary, params);
  TranscribedProblem phase1(params, boundary, options.n_knots,
                            PlanObjective::kTimeOptimal, FuelWeights::uniform(),
                            std::nullopt, 0.3 * tf_guess);
  result.phase1 = solve_nlp(phase1, phase1.initial_guess(tf_guess), options.solver);
  if (!result.phase1.converged) {
    throw PlanningError("time-optimal phase did not converge (" + result.phase1.message + ")");
  }
  result.tf_star = phase1.final_time_of(result.phase1.z);

  // Minimum-effort cleanup at the fixed optimum t_f*. J = t_f is flat along
  // opposing-thruster cancellations; this pass selects the minimum-effort
  // member of the time-optimal set without moving t_f*. The feasible set here
  // is nearly a single point, which leaves the duals ill-defined, so the solve
  // gets a bounded budget and a failure just keeps the phase-1 trajectory.
  Trajectory time_optimal = phase1.extract(result.phase1.z);
  {
    TranscribedProblem cleanup(params, boundary, options.n_knots, PlanObjective::kFuel,
                               options.fuel_weights, result.tf_star);
    NlpSolveOptions cleanup_opts = options.solver;
    cleanup_opts.max_outer = std::min(cleanup_opts.max_outer, 15);
    result.cleanup = solve_nlp(cleanup, cleanup.pack(time_optimal), cleanup_opts);
    if (result.cleanup.converged) {
      Trajectory cleaned = cleanup.extract(result.cleanup.z);
      if (check_trajectory(cleaned, boundary, params).ok() &&
          fuel_cost_of(cleaned, options.fuel_weights) <=
              fuel_cost_of(time_optimal, options.fuel_weights)) {
        time_optimal = cleaned;
      }
    }
  }
  {
    const TrajectoryCheck check = check_trajectory(time_optimal, boundary, params);
    if (!check.ok()) {
      throw PlanningError("time-optimal trajectory failed re-validation, max defect " +
                          std::to_string(check.max_defect));
    }
  }
  result.time_optimal = time_optimal;
  result.time_optimal_fuel_cost = fuel_cost_of(time_optimal, options.fuel_weights);

  // At alpha = 1 the dilated horizon is t_f* itself, so the fuel problem is
  // exactly the cleanup problem already solved above; its feasible set is a
  // single point and re-solving it buys nothing.
  if (options.alpha == 1.0) {
    result.phase2 = result.cleanup;
    result.trajectory = time_optimal;
    result.fuel_cost = result.time_optimal_fuel_cost;
    return result;
  }

  // Phase 2: fuel objective on the dilated horizon.
  const double tf_des = options.alpha * result.tf_star;
  TranscribedProblem phase2(params, boundary, options.n_knots, PlanObjective::kFuel,
                            options.fuel_weights, tf_des);
  const Trajectory warm = rescale_in_time(time_optimal, options.alpha);
  result.phase2 = solve_nlp(phase2, phase2.pack(warm), options.solver);
  if (!result.phase2.converged) {
    throw PlanningError("fuel phase did not converge (" + result.phase2.message + ")");
  }
  result.trajectory = phase2.extract(result.phase2.z);
  {
    const TrajectoryCheck check = check_trajectory(result.trajectory, boundary, params);
    if (!check.ok()) {
      throw PlanningError("fuel-optimal trajectory failed re-validation, max defect " +
                          std::to_string(check.max_defect));
    }
  }
  result.fuel_cost = fuel_cost_of(result.trajectory, options.fuel_weights);
  return result;
}

}  // namespace floatgnc
