#pragma once

#include <Eigen/Dense>

#include "floatgnc/platform.hpp"

namespace floatgnc {

/// Noise model for the observer. All vectors are diagonals in state order
/// [x y theta xdot ydot thetadot omega_rw]. measurement_noise carries seven
/// entries to mirror the shipped tuning tables, but only four channels are
/// physical: 0-2 are the x, y, theta variances and 6 is omega_rw. Entries
/// 3-5 are placeholders for velocity pseudo-measurements that the filter
/// never uses (velocities are estimated, not measured).
struct KfConfig {
  Eigen::Matrix<double, 7, 1> process_noise = Eigen::Matrix<double, 7, 1>::Ones();
  Eigen::Matrix<double, 7, 1> measurement_noise = Eigen::Matrix<double, 7, 1>::Ones();
  Eigen::Matrix<double, 7, 1> initial_covariance = Eigen::Matrix<double, 7, 1>::Ones();
  double gate_sigma = 5.0;  // innovation gate, in standard deviations

  static KfConfig defaults();
  void validate() const;  // throws std::invalid_argument
};

/// Pose + wheel-speed measurement at the estimator rate. theta must be in
/// (-pi, pi]. Validity flags support dropouts per channel.
struct Measurement {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double omega_rw = 0.0;
  bool x_valid = true;
  bool y_valid = true;
  bool theta_valid = true;
  bool omega_valid = true;
};

/// Filter state. The covariance is kept as two independent blocks: a 5x5
/// over [x y xdot ydot omega_rw] and a 2x2 over [theta thetadot]; the
/// orientation lives on a circle and is filtered in its tangent space, so
/// cross terms between the blocks are dropped by design. mean[kTheta] is
/// continuous (not wrapped) so downstream consumers never see 2 pi jumps.
struct Estimate {
  State7 mean = State7::Zero();
  Eigen::Matrix<double, 5, 5> cov_linear = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix2d cov_angle = Eigen::Matrix2d::Zero();

  double wrapped_theta() const { return wrap_angle(mean[kTheta]); }
  Mat7 covariance() const;  // assembled block-diagonal matrix in state order
};

/// Which channels survived gating in one update, and their innovations.
struct UpdateReport {
  bool x_used = false;
  bool y_used = false;
  bool theta_used = false;
  bool omega_used = false;
  double x_innovation = 0.0;
  double y_innovation = 0.0;
  double theta_innovation = 0.0;
  double omega_innovation = 0.0;

  bool any_used() const { return x_used || y_used || theta_used || omega_used; }
};

/// Kalman observer for the platform: a linear filter on the translation +
/// wheel block and a tangent-space filter on the heading block. Predict
/// propagates the mean through the full nonlinear dynamics with the applied
/// (post-modulation) control and the covariance blocks through their exact
/// discrete transitions; updates are sequential scalar Joseph-form steps
/// with per-channel innovation gating.
class Observer {
 public:
  Observer(const KfConfig& config, const PlatformParams& params);

  /// Seeds the filter from the first measurement: pose and wheel speed from
  /// the measurement, velocities zero, covariance from the configured
  /// initial diagonal. Channels flagged invalid fall back to zero.
  void initialize(const Measurement& m);
  bool initialized() const { return initialized_; }

  /// Restores a saved filter state (e.g. when resuming from a log).
  void set_estimate(const Estimate& e);

  void predict(const Control9& u_applied, double dt);

  /// Update of the linear block from (x, y, omega_rw). Gated channels and
  /// channels flagged invalid are skipped; if everything is skipped the
  /// step degenerates to predict-only.
  UpdateReport update_linear(const Measurement& m);

  /// Tangent-space update of the heading block. The innovation is the
  /// wrapped difference between the measured and estimated orientation, so
  /// a seam crossing never injects a 2 pi step.
  UpdateReport update_angle(const Measurement& m);

  /// update_linear followed by update_angle, reports merged.
  UpdateReport update(const Measurement& m);

  const Estimate& estimate() const { return estimate_; }
  const KfConfig& config() const { return config_; }

 private:
  KfConfig config_;
  PlatformParams params_;
  Estimate estimate_;
  bool initialized_ = false;
};

}  // namespace floatgnc
