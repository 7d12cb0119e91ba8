#include "floatgnc/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace floatgnc {

namespace {

// State indices inside the linear covariance block.
enum LinearIndex : int { kLx = 0, kLy, kLvx, kLvy, kLomega, kLinearDim };

constexpr int kLinearStateOf[kLinearDim] = {kX, kY, kVx, kVy, kOmegaRw};

// One scalar Joseph-form update on an n x n block. Returns false when the
// innovation fails the gate; mean and covariance are untouched then.
template <int N>
bool scalar_update(Eigen::Matrix<double, N, 1>& mean, Eigen::Matrix<double, N, N>& cov,
                   int idx, double z, double variance, double gate_sigma,
                   double* innovation_out) {
  const double innovation = z - mean[idx];
  if (innovation_out) *innovation_out = innovation;
  const double s = cov(idx, idx) + variance;
  if (innovation * innovation > gate_sigma * gate_sigma * s) return false;

  const Eigen::Matrix<double, N, 1> k = cov.col(idx) / s;
  mean += k * innovation;
  Eigen::Matrix<double, N, N> ikh = Eigen::Matrix<double, N, N>::Identity();
  ikh.col(idx) -= k;  // I - K H with H = e_idx'
  cov = ikh * cov * ikh.transpose() + variance * k * k.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return true;
}

}  // namespace

KfConfig KfConfig::defaults() {
  KfConfig c;
  c.process_noise << 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 1.0;
  c.measurement_noise << 1e-3, 1e-3, 1e-3, 5e3, 5e3, 5e3, 1.0;
  c.initial_covariance << 1e-2, 1e-2, 1e-2, 1e-1, 1e-1, 1e-1, 1e-2;
  return c;
}

void KfConfig::validate() const {
  if (!process_noise.allFinite() || !measurement_noise.allFinite() ||
      !initial_covariance.allFinite() || !std::isfinite(gate_sigma)) {
    throw std::invalid_argument("kf config: non-finite entry");
  }
  if ((process_noise.array() < 0.0).any() || (initial_covariance.array() < 0.0).any()) {
    throw std::invalid_argument("kf config: noise diagonals must be non-negative");
  }
  if ((measurement_noise.array() <= 0.0).any()) {
    throw std::invalid_argument("kf config: measurement variances must be positive");
  }
  if (!(gate_sigma > 0.0)) {
    throw std::invalid_argument("kf config: gate must be positive");
  }
}

Mat7 Estimate::covariance() const {
  Mat7 p = Mat7::Zero();
  for (int i = 0; i < kLinearDim; ++i) {
    for (int j = 0; j < kLinearDim; ++j) {
      p(kLinearStateOf[i], kLinearStateOf[j]) = cov_linear(i, j);
    }
  }
  p(kTheta, kTheta) = cov_angle(0, 0);
  p(kTheta, kThetaDot) = cov_angle(0, 1);
  p(kThetaDot, kTheta) = cov_angle(1, 0);
  p(kThetaDot, kThetaDot) = cov_angle(1, 1);
  return p;
}

Observer::Observer(const KfConfig& config, const PlatformParams& params)
    : config_(config), params_(params) {
  config_.validate();
  params_.validate();
}

void Observer::initialize(const Measurement& m) {
  estimate_ = Estimate{};
  estimate_.mean[kX] = m.x_valid ? m.x : 0.0;
  estimate_.mean[kY] = m.y_valid ? m.y : 0.0;
  estimate_.mean[kTheta] = m.theta_valid ? m.theta : 0.0;
  estimate_.mean[kOmegaRw] = m.omega_valid ? m.omega_rw : 0.0;
  for (int i = 0; i < kLinearDim; ++i) {
    estimate_.cov_linear(i, i) = config_.initial_covariance[kLinearStateOf[i]];
  }
  estimate_.cov_angle(0, 0) = config_.initial_covariance[kTheta];
  estimate_.cov_angle(1, 1) = config_.initial_covariance[kThetaDot];
  initialized_ = true;
}

void Observer::set_estimate(const Estimate& e) {
  if (!e.mean.allFinite() || !e.cov_linear.allFinite() || !e.cov_angle.allFinite()) {
    throw std::invalid_argument("observer: non-finite estimate");
  }
  estimate_ = e;
  initialized_ = true;
}

void Observer::predict(const Control9& u_applied, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("observer: dt must be positive");
  if (!initialized_) throw std::logic_error("observer: predict before initialize");

  // Mean through the full nonlinear dynamics (one RK4 step).
  const State7& x = estimate_.mean;
  const State7 k1 = dynamics(x, u_applied, params_);
  const State7 k2 = dynamics(x + 0.5 * dt * k1, u_applied, params_);
  const State7 k3 = dynamics(x + 0.5 * dt * k2, u_applied, params_);
  const State7 k4 = dynamics(x + dt * k3, u_applied, params_);
  estimate_.mean = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  // Covariance blocks through their exact discrete transitions. Position
  // integrates velocity; the wheel speed and the heading rate rows are
  // driven by the control only, so their transition is the identity.
  Eigen::Matrix<double, 5, 5> f5 = Eigen::Matrix<double, 5, 5>::Identity();
  f5(kLx, kLvx) = dt;
  f5(kLy, kLvy) = dt;
  Eigen::Matrix<double, 5, 1> q5;
  for (int i = 0; i < kLinearDim; ++i) q5[i] = config_.process_noise[kLinearStateOf[i]];
  estimate_.cov_linear = f5 * estimate_.cov_linear * f5.transpose();
  estimate_.cov_linear += (dt * q5).asDiagonal();
  estimate_.cov_linear = 0.5 * (estimate_.cov_linear + estimate_.cov_linear.transpose()).eval();

  Eigen::Matrix2d f2 = Eigen::Matrix2d::Identity();
  f2(0, 1) = dt;
  estimate_.cov_angle = f2 * estimate_.cov_angle * f2.transpose();
  estimate_.cov_angle(0, 0) += dt * config_.process_noise[kTheta];
  estimate_.cov_angle(1, 1) += dt * config_.process_noise[kThetaDot];
  estimate_.cov_angle = 0.5 * (estimate_.cov_angle + estimate_.cov_angle.transpose()).eval();
}

UpdateReport Observer::update_linear(const Measurement& m) {
  if (!initialized_) throw std::logic_error("observer: update before initialize");
  UpdateReport report;

  Eigen::Matrix<double, 5, 1> mean;
  for (int i = 0; i < kLinearDim; ++i) mean[i] = estimate_.mean[kLinearStateOf[i]];

  if (m.x_valid) {
    report.x_used = scalar_update<5>(mean, estimate_.cov_linear, kLx, m.x,
                                     config_.measurement_noise[kX],
                                     config_.gate_sigma, &report.x_innovation);
  }
  if (m.y_valid) {
    report.y_used = scalar_update<5>(mean, estimate_.cov_linear, kLy, m.y,
                                     config_.measurement_noise[kY],
                                     config_.gate_sigma, &report.y_innovation);
  }
  if (m.omega_valid) {
    report.omega_used = scalar_update<5>(mean, estimate_.cov_linear, kLomega, m.omega_rw,
                                         config_.measurement_noise[kOmegaRw],
                                         config_.gate_sigma, &report.omega_innovation);
  }
  for (int i = 0; i < kLinearDim; ++i) estimate_.mean[kLinearStateOf[i]] = mean[i];
  return report;
}

UpdateReport Observer::update_angle(const Measurement& m) {
  if (!initialized_) throw std::logic_error("observer: update before initialize");
  UpdateReport report;
  if (!m.theta_valid) return report;

  // The innovation lives in the tangent space of the circle: wrap the
  // difference, then apply it to the continuous internal angle.
  Eigen::Vector2d mean(0.0, estimate_.mean[kThetaDot]);
  const double innovation_target = wrap_angle(m.theta - estimate_.mean[kTheta]);
  report.theta_used = scalar_update<2>(mean, estimate_.cov_angle, 0, innovation_target,
                                       config_.measurement_noise[kTheta],
                                       config_.gate_sigma, &report.theta_innovation);
  if (report.theta_used) {
    estimate_.mean[kTheta] += mean[0];
    estimate_.mean[kThetaDot] = mean[1];
  }
  return report;
}

UpdateReport Observer::update(const Measurement& m) {
  UpdateReport report = update_linear(m);
  const UpdateReport angle = update_angle(m);
  report.theta_used = angle.theta_used;
  report.theta_innovation = angle.theta_innovation;
  return report;
}

}  // namespace floatgnc
