#pragma once

#include <optional>
#include <vector>

#include "floatgnc/nlp_solver.hpp"
#include "floatgnc/platform.hpp"
#include "floatgnc/trajectory.hpp"

namespace floatgnc {

/// Boundary states plus the box the trajectory must stay inside.
struct BoundarySpec {
  State7 x_init = State7::Zero();
  State7 x_final = State7::Zero();
  State7 state_lower = State7::Zero();
  State7 state_upper = State7::Zero();
  Control9 control_lower = Control9::Zero();
  Control9 control_upper = Control9::Zero();

  /// Rest-to-rest boundaries with default bounds: positions boxed around the
  /// hull of the two endpoints (3 m margin), heading within the endpoint hull
  /// plus a full turn, |v| <= 0.5 m/s, |thetadot| <= 0.5 rad/s, wheel and
  /// thruster limits from params.
  static BoundarySpec rest_to_rest(const State7& from, const State7& to,
                                   const PlatformParams& params);

  void validate() const;  // throws std::invalid_argument
};

/// Diagonal control weights of the fuel cost sum_k u_k^T R u_k.
struct FuelWeights {
  Eigen::Matrix<double, 9, 1> r_diag;

  FuelWeights() { r_diag.setOnes(); }
  static FuelWeights uniform(double w = 1.0);
  /// Small wheel weight, large identical thruster weights.
  static FuelWeights thruster_heavy(double tau_w = 1.0, double thruster_w = 200.0);
  void validate() const;
};

enum class PlanObjective { kTimeOptimal, kFuel };

/// Hermite-Simpson defect of one interval:
///   x_mid = (xa + xb)/2 + dt/8 (fa - fb),  u_mid = (ua + ub)/2,
///   defect = xb - xa - dt/6 (fa + 4 f_mid + fb).
Eigen::Matrix<double, 7, 1> hermite_simpson_defect(const Knot& a, const Knot& b,
                                                   double dt,
                                                   const PlatformParams& params);

/// Direct transcription of the two-point boundary problem on n_knots knots.
/// Decision vector: [x_0 u_0 x_1 u_1 ... x_{N-1} u_{N-1} (t_f)] where the
/// trailing t_f is present only when the final time is free. Equality
/// constraints: 7(N-1) defects followed by 14 boundary residuals. Boundary
/// knots are additionally pinned through the variable bounds.
class TranscribedProblem : public NlpProblem {
 public:
  /// fixed_tf == nullopt leaves t_f free (time-scaled grid on [0,1], t_f a
  /// decision variable in [1e-3, 600]); otherwise the grid spacing is fixed.
  /// tf_lower tightens the free-t_f lower bound: a minimum-time objective is
  /// linear in t_f, and with a weak early penalty the minimizer dives to the
  /// bound before feasibility pulls it back, so callers that can bound the
  /// optimum away from zero should. Ignored when t_f is fixed or when below
  /// the built-in floor.
  TranscribedProblem(const PlatformParams& params, const BoundarySpec& boundary,
                     int n_knots, PlanObjective objective,
                     const FuelWeights& weights,
                     std::optional<double> fixed_tf, double tf_lower = 0.0);

  int num_vars() const override { return n_vars_; }
  int num_eq() const override { return n_eq_; }
  const Eigen::VectorXd& lower() const override { return lb_; }
  const Eigen::VectorXd& upper() const override { return ub_; }
  double eval(const Eigen::VectorXd& z, Eigen::VectorXd& grad_f,
              Eigen::VectorXd& c) override;
  double eval_value(const Eigen::VectorXd& z, Eigen::VectorXd& c) override;
  void jac_transpose_mul(const Eigen::VectorXd& w,
                         Eigen::VectorXd& out) const override;
  Eigen::VectorXd variable_scales() const override;
  bool gauss_newton_data(std::vector<Eigen::Triplet<double>>& jacobian,
                         Eigen::VectorXd& objective_hessian_diag) const override;

  bool tf_free() const { return !fixed_tf_.has_value(); }
  int tf_index() const;  // throws if t_f is fixed
  int n_knots() const { return n_knots_; }

  /// Initial iterate: states linearly interpolated between the boundaries,
  /// controls zero, t_f (when free) from the supplied guess.
  Eigen::VectorXd initial_guess(double tf_guess) const;
  /// Packs an existing trajectory (and optional t_f override) into z.
  Eigen::VectorXd pack(const Trajectory& traj) const;
  Trajectory extract(const Eigen::VectorXd& z) const;

  double final_time_of(const Eigen::VectorXd& z) const;
  /// Max |boundary residual| at z (the trailing 14 constraint rows).
  double boundary_residual(const Eigen::VectorXd& z) const;

 private:
  void compute_constraints(const Eigen::VectorXd& z, Eigen::VectorXd& c,
                           bool with_jacobian);
  double objective_value(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const;

  PlatformParams params_;
  BoundarySpec boundary_;
  int n_knots_;
  PlanObjective objective_;
  FuelWeights weights_;
  std::optional<double> fixed_tf_;

  int n_vars_ = 0;
  int n_eq_ = 0;
  Eigen::VectorXd lb_, ub_;

  // Cached Jacobian blocks of the defects, filled by eval().
  struct IntervalJac {
    Mat7 dxa, dxb;
    Mat7x9 dua, dub;
    Eigen::Matrix<double, 7, 1> dtf;
  };
  std::vector<IntervalJac> jac_;
  bool jac_valid_ = false;
};

}  // namespace floatgnc
