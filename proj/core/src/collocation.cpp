#include "floatgnc/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace floatgnc {

namespace {

constexpr int kKnotStride = static_cast<int>(kStateDim) + static_cast<int>(kControlDim);  // 16
constexpr double kTfMin = 1e-3;
constexpr double kTfMax = 600.0;

}  // namespace

BoundarySpec BoundarySpec::rest_to_rest(const State7& from, const State7& to,
                                        const PlatformParams& params) {
  BoundarySpec b;
  b.x_init = from;
  b.x_final = to;
  for (int i : {kX, kY}) {
    b.state_lower[i] = std::min(from[i], to[i]) - 3.0;
    b.state_upper[i] = std::max(from[i], to[i]) + 3.0;
  }
  b.state_lower[kTheta] = std::min(from[kTheta], to[kTheta]) - 2.0 * std::numbers::pi;
  b.state_upper[kTheta] = std::max(from[kTheta], to[kTheta]) + 2.0 * std::numbers::pi;
  for (int i : {kVx, kVy, kThetaDot}) {
    b.state_lower[i] = -0.5;
    b.state_upper[i] = 0.5;
  }
  b.state_lower[kOmegaRw] = -params.wheel_speed_max;
  b.state_upper[kOmegaRw] = params.wheel_speed_max;
  b.control_lower[kTau] = -params.wheel_torque_max;
  b.control_upper[kTau] = params.wheel_torque_max;
  for (int i = 0; i < kNumThrusters; ++i) {
    b.control_lower[kF0 + i] = 0.0;
    b.control_upper[kF0 + i] = params.nominal_thrust;
  }
  return b;
}

void BoundarySpec::validate() const {
  if (!x_init.allFinite() || !x_final.allFinite() || !state_lower.allFinite() ||
      !state_upper.allFinite() || !control_lower.allFinite() ||
      !control_upper.allFinite()) {
    throw std::invalid_argument("BoundarySpec: non-finite entries");
  }
  for (int i = 0; i < kStateDim; ++i) {
    if (state_lower[i] > state_upper[i]) {
      throw std::invalid_argument("BoundarySpec: state_lower > state_upper");
    }
    if (x_init[i] < state_lower[i] - 1e-12 || x_init[i] > state_upper[i] + 1e-12 ||
        x_final[i] < state_lower[i] - 1e-12 || x_final[i] > state_upper[i] + 1e-12) {
      throw std::invalid_argument("BoundarySpec: boundary state outside the state box");
    }
  }
  for (int i = 0; i < kControlDim; ++i) {
    if (control_lower[i] > control_upper[i]) {
      throw std::invalid_argument("BoundarySpec: control_lower > control_upper");
    }
  }
}

FuelWeights FuelWeights::uniform(double w) {
  FuelWeights f;
  f.r_diag.setConstant(w);
  f.validate();
  return f;
}

FuelWeights FuelWeights::thruster_heavy(double tau_w, double thruster_w) {
  FuelWeights f;
  f.r_diag[kTau] = tau_w;
  for (int i = 0; i < kNumThrusters; ++i) f.r_diag[kF0 + i] = thruster_w;
  f.validate();
  return f;
}

void FuelWeights::validate() const {
  if (!r_diag.allFinite() || (r_diag.array() <= 0.0).any()) {
    throw std::invalid_argument("FuelWeights: weights must be finite and positive");
  }
}

Eigen::Matrix<double, 7, 1> hermite_simpson_defect(const Knot& a, const Knot& b,
                                                   double dt,
                                                   const PlatformParams& params) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("hermite_simpson_defect: dt must be positive");
  }
  const State7 fa = dynamics(a.state, a.control, params);
  const State7 fb = dynamics(b.state, b.control, params);
  const State7 xm = 0.5 * (a.state + b.state) + (dt / 8.0) * (fa - fb);
  const Control9 um = 0.5 * (a.control + b.control);
  const State7 fm = dynamics(xm, um, params);
  return b.state - a.state - (dt / 6.0) * (fa + 4.0 * fm + fb);
}

TranscribedProblem::TranscribedProblem(const PlatformParams& params,
                                       const BoundarySpec& boundary, int n_knots,
                                       PlanObjective objective,
                                       const FuelWeights& weights,
                                       std::optional<double> fixed_tf,
                                       double tf_lower)
    : params_(params),
      boundary_(boundary),
      n_knots_(n_knots),
      objective_(objective),
      weights_(weights),
      fixed_tf_(fixed_tf) {
  params_.validate();
  boundary_.validate();
  weights_.validate();
  if (n_knots_ < 2) throw std::invalid_argument("transcription needs at least 2 knots");
  if (fixed_tf_ && !(*fixed_tf_ > 0.0 && std::isfinite(*fixed_tf_))) {
    throw std::invalid_argument("transcription: fixed t_f must be positive");
  }
  if (!(tf_lower >= 0.0 && tf_lower < kTfMax) || !std::isfinite(tf_lower)) {
    throw std::invalid_argument("transcription: t_f lower bound out of range");
  }

  n_vars_ = kKnotStride * n_knots_ + (tf_free() ? 1 : 0);
  n_eq_ = kStateDim * (n_knots_ - 1) + 2 * kStateDim;

  lb_.resize(n_vars_);
  ub_.resize(n_vars_);
  for (int k = 0; k < n_knots_; ++k) {
    const int o = kKnotStride * k;
    lb_.segment<kStateDim>(o) = boundary_.state_lower;
    ub_.segment<kStateDim>(o) = boundary_.state_upper;
    lb_.segment<kControlDim>(o + kStateDim) = boundary_.control_lower;
    ub_.segment<kControlDim>(o + kStateDim) = boundary_.control_upper;
  }
  // Pin the boundary knots; the matching equality rows then cost nothing.
  lb_.segment<kStateDim>(0) = boundary_.x_init;
  ub_.segment<kStateDim>(0) = boundary_.x_init;
  lb_.segment<kStateDim>(kKnotStride * (n_knots_ - 1)) = boundary_.x_final;
  ub_.segment<kStateDim>(kKnotStride * (n_knots_ - 1)) = boundary_.x_final;
  if (tf_free()) {
    lb_[n_vars_ - 1] = std::max(kTfMin, tf_lower);
    ub_[n_vars_ - 1] = kTfMax;
  }
  jac_.resize(n_knots_ - 1);
}

int TranscribedProblem::tf_index() const {
  if (!tf_free()) throw std::logic_error("t_f is fixed in this transcription");
  return n_vars_ - 1;
}

double TranscribedProblem::final_time_of(const Eigen::VectorXd& z) const {
  return tf_free() ? z[n_vars_ - 1] : *fixed_tf_;
}

double TranscribedProblem::objective_value(const Eigen::VectorXd& z,
                                           Eigen::VectorXd* grad) const {
  if (grad) grad->setZero(n_vars_);
  if (objective_ == PlanObjective::kTimeOptimal) {
    if (grad) (*grad)[n_vars_ - 1] = 1.0;
    return z[n_vars_ - 1];
  }
  double j = 0.0;
  for (int k = 0; k < n_knots_; ++k) {
    const int o = kKnotStride * k + kStateDim;
    const auto u = z.segment<kControlDim>(o);
    j += (weights_.r_diag.array() * u.array().square()).sum();
    if (grad) grad->segment<kControlDim>(o) = 2.0 * weights_.r_diag.cwiseProduct(u);
  }
  return j;
}

void TranscribedProblem::compute_constraints(const Eigen::VectorXd& z,
                                             Eigen::VectorXd& c,
                                             bool with_jacobian) {
  const int n = n_knots_;
  const double hs = 1.0 / static_cast<double>(n - 1);
  const double tf = final_time_of(z);
  const double dt = tf_free() ? tf * hs : *fixed_tf_ * hs;

  c.resize(n_eq_);

  // Knot dynamics (and Jacobians) are shared between neighboring intervals.
  std::vector<State7> fk(n);
  std::vector<Linearization> link(with_jacobian ? n : 0);
  for (int k = 0; k < n; ++k) {
    const int o = kKnotStride * k;
    const State7 x = z.segment<kStateDim>(o);
    const Control9 u = z.segment<kControlDim>(o + kStateDim);
    fk[k] = dynamics(x, u, params_);
    if (with_jacobian) link[k] = jacobians(x, u, params_);
  }

  for (int k = 0; k + 1 < n; ++k) {
    const int oa = kKnotStride * k;
    const int ob = kKnotStride * (k + 1);
    const State7 xa = z.segment<kStateDim>(oa);
    const State7 xb = z.segment<kStateDim>(ob);
    const Control9 ua = z.segment<kControlDim>(oa + kStateDim);
    const Control9 ub = z.segment<kControlDim>(ob + kStateDim);

    const State7 xm = 0.5 * (xa + xb) + (dt / 8.0) * (fk[k] - fk[k + 1]);
    const Control9 um = 0.5 * (ua + ub);
    const State7 fm = dynamics(xm, um, params_);

    c.segment<kStateDim>(kStateDim * k) =
        xb - xa - (dt / 6.0) * (fk[k] + 4.0 * fm + fk[k + 1]);

    if (with_jacobian) {
      const Linearization linm = jacobians(xm, um, params_);
      const Mat7& Aa = link[k].A;
      const Mat7& Ab = link[k + 1].A;
      const Mat7x9& Ba = link[k].B;
      const Mat7x9& Bb = link[k + 1].B;
      IntervalJac& J = jac_[k];

      const Mat7 AmXa = linm.A * (0.5 * Mat7::Identity() + (dt / 8.0) * Aa);
      const Mat7 AmXb = linm.A * (0.5 * Mat7::Identity() - (dt / 8.0) * Ab);
      J.dxa = -Mat7::Identity() - (dt / 6.0) * (Aa + 4.0 * AmXa);
      J.dxb = Mat7::Identity() - (dt / 6.0) * (Ab + 4.0 * AmXb);
      J.dua = -(dt / 6.0) * (Ba + 4.0 * ((dt / 8.0) * (linm.A * Ba) + 0.5 * linm.B));
      J.dub = -(dt / 6.0) * (Bb + 4.0 * (-(dt / 8.0) * (linm.A * Bb) + 0.5 * linm.B));
      if (tf_free()) {
        J.dtf = -(hs / 6.0) * (fk[k] + 4.0 * fm + fk[k + 1]) -
                (dt / 6.0) * 4.0 * (linm.A * ((hs / 8.0) * (fk[k] - fk[k + 1])));
      } else {
        J.dtf.setZero();
      }
    }
  }

  // Boundary residuals.
  const int ob = kStateDim * (n - 1);
  c.segment<kStateDim>(ob) = z.segment<kStateDim>(0) - boundary_.x_init;
  c.segment<kStateDim>(ob + kStateDim) =
      z.segment<kStateDim>(kKnotStride * (n - 1)) - boundary_.x_final;

  jac_valid_ = with_jacobian;
}

double TranscribedProblem::eval(const Eigen::VectorXd& z, Eigen::VectorXd& grad_f,
                                Eigen::VectorXd& c) {
  compute_constraints(z, c, true);
  return objective_value(z, &grad_f);
}

double TranscribedProblem::eval_value(const Eigen::VectorXd& z, Eigen::VectorXd& c) {
  compute_constraints(z, c, false);
  return objective_value(z, nullptr);
}

void TranscribedProblem::jac_transpose_mul(const Eigen::VectorXd& w,
                                           Eigen::VectorXd& out) const {
  if (!jac_valid_) throw std::logic_error("jac_transpose_mul before eval");
  out.setZero(n_vars_);
  for (int k = 0; k + 1 < n_knots_; ++k) {
    const auto wk = w.segment<kStateDim>(kStateDim * k);
    const int oa = kKnotStride * k;
    const int ob = kKnotStride * (k + 1);
    const IntervalJac& J = jac_[k];
    out.segment<kStateDim>(oa) += J.dxa.transpose() * wk;
    out.segment<kControlDim>(oa + kStateDim) += J.dua.transpose() * wk;
    out.segment<kStateDim>(ob) += J.dxb.transpose() * wk;
    out.segment<kControlDim>(ob + kStateDim) += J.dub.transpose() * wk;
    if (tf_free()) out[n_vars_ - 1] += J.dtf.dot(wk);
  }
  const int orow = kStateDim * (n_knots_ - 1);
  out.segment<kStateDim>(0) += w.segment<kStateDim>(orow);
  out.segment<kStateDim>(kKnotStride * (n_knots_ - 1)) +=
      w.segment<kStateDim>(orow + kStateDim);
}

Eigen::VectorXd TranscribedProblem::variable_scales() const {
  Eigen::VectorXd d(n_vars_);
  for (int i = 0; i < n_vars_; ++i) {
    d[i] = std::clamp(0.5 * (ub_[i] - lb_[i]), 0.1, 20.0);
  }
  return d;
}

bool TranscribedProblem::gauss_newton_data(
    std::vector<Eigen::Triplet<double>>& jacobian,
    Eigen::VectorXd& objective_hessian_diag) const {
  if (!jac_valid_) throw std::logic_error("gauss_newton_data before eval");
  jacobian.clear();
  jacobian.reserve(static_cast<std::size_t>(n_knots_) * 7 * 33 + 14);
  for (int k = 0; k + 1 < n_knots_; ++k) {
    const int row = kStateDim * k;
    const int oa = kKnotStride * k;
    const int ob = kKnotStride * (k + 1);
    const IntervalJac& J = jac_[k];
    for (int i = 0; i < kStateDim; ++i) {
      for (int j = 0; j < kStateDim; ++j) {
        jacobian.emplace_back(row + i, oa + j, J.dxa(i, j));
        jacobian.emplace_back(row + i, ob + j, J.dxb(i, j));
      }
      for (int j = 0; j < kControlDim; ++j) {
        jacobian.emplace_back(row + i, oa + kStateDim + j, J.dua(i, j));
        jacobian.emplace_back(row + i, ob + kStateDim + j, J.dub(i, j));
      }
      if (tf_free()) jacobian.emplace_back(row + i, n_vars_ - 1, J.dtf[i]);
    }
  }
  const int orow = kStateDim * (n_knots_ - 1);
  for (int i = 0; i < kStateDim; ++i) {
    jacobian.emplace_back(orow + i, i, 1.0);
    jacobian.emplace_back(orow + kStateDim + i, kKnotStride * (n_knots_ - 1) + i, 1.0);
  }

  objective_hessian_diag = Eigen::VectorXd::Zero(n_vars_);
  if (objective_ == PlanObjective::kFuel) {
    for (int k = 0; k < n_knots_; ++k) {
      objective_hessian_diag.segment<kControlDim>(kKnotStride * k + kStateDim) =
          2.0 * weights_.r_diag;
    }
  }
  return true;
}

Eigen::VectorXd TranscribedProblem::initial_guess(double tf_guess) const {
  // Quintic ease between the endpoints with velocities set to the profile's
  // actual time derivative. A plain zero-velocity interpolation makes every
  // defect the same constant, which is a stationary point of the penalty in
  // all interior states and lets the minimizer crash t_f into its lower
  // bound; the consistent profile keeps the defects small and t_f-dependent.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_vars_);
  const double tf = tf_free()
                        ? std::clamp(tf_guess, lb_[n_vars_ - 1], ub_[n_vars_ - 1])
                        : std::clamp(tf_guess, kTfMin, kTfMax);
  const State7 dx = boundary_.x_final - boundary_.x_init;
  for (int k = 0; k < n_knots_; ++k) {
    const double a = static_cast<double>(k) / static_cast<double>(n_knots_ - 1);
    const double s = a * a * a * (10.0 + a * (6.0 * a - 15.0));
    const double sdot = 30.0 * a * a * (1.0 - a) * (1.0 - a) / tf;
    State7 x = boundary_.x_init + s * dx;
    x[kVx] += sdot * dx[kX];
    x[kVy] += sdot * dx[kY];
    x[kThetaDot] += sdot * dx[kTheta];
    z.segment<kStateDim>(kKnotStride * k) =
        x.cwiseMax(boundary_.state_lower).cwiseMin(boundary_.state_upper);
  }
  if (tf_free()) z[n_vars_ - 1] = tf;
  return z;
}

Eigen::VectorXd TranscribedProblem::pack(const Trajectory& traj) const {
  if (traj.num_knots() != n_knots_) {
    throw std::invalid_argument("pack: knot count mismatch");
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_vars_);
  for (int k = 0; k < n_knots_; ++k) {
    z.segment<kStateDim>(kKnotStride * k) = traj.knots[k].state;
    z.segment<kControlDim>(kKnotStride * k + kStateDim) = traj.knots[k].control;
  }
  if (tf_free()) z[n_vars_ - 1] = std::max(traj.final_time(), lb_[n_vars_ - 1]);
  return z;
}

Trajectory TranscribedProblem::extract(const Eigen::VectorXd& z) const {
  Trajectory traj;
  traj.knots.resize(n_knots_);
  const double dt = final_time_of(z) / static_cast<double>(n_knots_ - 1);
  for (int k = 0; k < n_knots_; ++k) {
    traj.knots[k].t = dt * static_cast<double>(k);
    traj.knots[k].state = z.segment<kStateDim>(kKnotStride * k);
    traj.knots[k].control = z.segment<kControlDim>(kKnotStride * k + kStateDim);
  }
  return traj;
}

double TranscribedProblem::boundary_residual(const Eigen::VectorXd& z) const {
  const double r0 = (z.segment<kStateDim>(0) - boundary_.x_init).lpNorm<Eigen::Infinity>();
  const double r1 = (z.segment<kStateDim>(kKnotStride * (n_knots_ - 1)) - boundary_.x_final)
                        .lpNorm<Eigen::Infinity>();
  return std::max(r0, r1);
}

}  // namespace floatgnc
