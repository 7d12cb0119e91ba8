#pragma once

#include <stdexcept>
#include <string>

#include "floatgnc/collocation.hpp"

namespace floatgnc {

/// Planning failed (either phase not converged or the result did not pass
/// independent re-validation).
class PlanningError : public std::runtime_error {
 public:
  explicit PlanningError(const std::string& what) : std::runtime_error(what) {}
};

struct PlanOptions {
  int n_knots = 100;
  double alpha = 1.5;  // phase-2 time dilation, t_f = alpha * t_f*
  FuelWeights fuel_weights = FuelWeights::uniform();
  NlpSolveOptions solver;

  void validate() const;
};

struct TrajectoryCheck {
  double max_defect = 0.0;
  double max_bound_violation = 0.0;
  double boundary_residual = 0.0;

  bool ok(double defect_tol = 1e-6, double bound_tol = 1e-9,
          double boundary_tol = 1e-8) const {
    return max_defect <= defect_tol && max_bound_violation <= bound_tol &&
           boundary_residual <= boundary_tol;
  }
};

struct PlanResult {
  Trajectory trajectory;     // fuel-optimal plan at alpha * t_f*
  Trajectory time_optimal;   // minimum-time plan (minimum effort tie-break)
  double tf_star = 0.0;
  double fuel_cost = 0.0;             // of `trajectory`, sum_k u^T R u
  double time_optimal_fuel_cost = 0.0;
  bool degenerate = false;            // x_init == x_final shortcut
  NlpSolution phase1, cleanup, phase2;
};

/// sum_k u_k^T R u_k over all knots.
double fuel_cost_of(const Trajectory& traj, const FuelWeights& weights);

/// Coarse bang-bang time estimate (velocity-capped, translation and rotation
/// considered independently). Used only to initialize the free final time.
double bang_bang_time_heuristic(const BoundarySpec& boundary,
                                const PlatformParams& params);

/// Re-validates a trajectory independently of any solver state: recomputes
/// every Hermite-Simpson defect from the knots, checks the boxes and the
/// boundary states.
TrajectoryCheck check_trajectory(const Trajectory& traj,
                                 const BoundarySpec& boundary,
                                 const PlatformParams& params);

/// Phase 1: free-final-time minimum-time solve, then a minimum-effort cleanup
/// at the optimal t_f*. Phase 2: fuel objective at fixed t_f = alpha * t_f*,
/// warm-started from the time-rescaled phase-1 solution. At alpha = 1 phase 2
/// coincides with the cleanup problem and the cleanup result is returned
/// directly. Throws PlanningError if a phase fails to converge or
/// re-validation fails.
PlanResult plan_two_phase(const PlatformParams& params,
                          const BoundarySpec& boundary,
                          const PlanOptions& options = {});

}  // namespace floatgnc
