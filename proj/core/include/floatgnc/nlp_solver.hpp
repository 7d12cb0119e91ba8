#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace floatgnc {

/// Smooth equality-constrained problem over a box:
///   minimize f(z)  subject to  c(z) = 0,  lb <= z <= ub.
/// eval() caches whatever it needs (typically constraint Jacobian blocks) so
/// that jac_transpose_mul() can be answered at the same point. A problem
/// instance is used by one solver at a time.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual const Eigen::VectorXd& lower() const = 0;
  virtual const Eigen::VectorXd& upper() const = 0;

  /// Full evaluation at z: returns f, fills grad_f and c, caches the
  /// constraint Jacobian for jac_transpose_mul.
  virtual double eval(const Eigen::VectorXd& z, Eigen::VectorXd& grad_f,
                      Eigen::VectorXd& c) = 0;

  /// Value-only evaluation (cheaper, used inside line searches).
  virtual double eval_value(const Eigen::VectorXd& z, Eigen::VectorXd& c) = 0;

  /// out = Jc(z)^T w for the z last passed to eval().
  virtual void jac_transpose_mul(const Eigen::VectorXd& w,
                                 Eigen::VectorXd& out) const = 0;

  /// Positive per-variable magnitudes used to precondition the solver.
  virtual Eigen::VectorXd variable_scales() const {
    return Eigen::VectorXd::Ones(num_vars());
  }

  /// Optional second-order interface. Fills the sparse constraint Jacobian
  /// (valid at the z last passed to eval()) and the diagonal of the objective
  /// Hessian, enabling the Gauss-Newton inner minimizer. Problems that return
  /// false are solved with the limited-memory BFGS path instead.
  virtual bool gauss_newton_data(std::vector<Eigen::Triplet<double>>& jacobian,
                                 Eigen::VectorXd& objective_hessian_diag) const {
    (void)jacobian;
    (void)objective_hessian_diag;
    return false;
  }
};

struct NlpSolveOptions {
  double eq_tol = 1e-9;        // feasibility target of the tolerance schedule
  double eq_accept = 1e-7;     // ||c||_inf level accepted as converged
  // Projected-gradient threshold, relative to the objective's own gradient
  // magnitude (clamped to [1, 1e4]); an absolute test would be unreachable
  // once gradient entries dwarf the double-precision resolution of the merit.
  double grad_tol = 1e-6;
  double mu0 = 10.0;
  double mu_growth = 10.0;
  // Penalty levels much beyond 1e8 make line-search progress on an O(1e3)
  // objective smaller than double-precision noise; feasibility past this cap
  // has to come from the multiplier updates instead.
  double mu_max = 1e8;
  int max_outer = 50;
  int max_inner = 800;         // per outer round
  int max_total_inner = 60000;
  int lbfgs_memory = 12;
  bool verbose = false;
};

struct NlpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  double max_constraint_violation = 0.0;  // ||c||_inf at z
  double max_bound_violation = 0.0;       // 0 by construction (projection)
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  std::string message;
};

/// Augmented-Lagrangian outer loop with a box-projected, Powell-damped
/// limited-memory BFGS inner minimizer. Deterministic: no randomness, no
/// wall-clock dependence; identical inputs give identical iterates.
NlpSolution solve_nlp(NlpProblem& problem, const Eigen::VectorXd& z0,
                      const NlpSolveOptions& options = {});

}  // namespace floatgnc
