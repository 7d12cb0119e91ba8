#include "floatgnc/platform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace floatgnc {

namespace {

constexpr double kDirX[kNumThrusters] = {0, 0, -1, 1, 0, 0, 1, -1};
constexpr double kDirY[kNumThrusters] = {1, -1, 0, 0, -1, 1, 0, 0};
constexpr double kTorqueSign[kNumThrusters] = {1, -1, 1, -1, 1, -1, 1, -1};

}  // namespace

void PlatformParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(mass) || !positive(body_inertia) || !positive(wheel_inertia) ||
      !positive(thruster_arm) || !positive(nominal_thrust) ||
      !positive(wheel_speed_max) || !positive(wheel_torque_max) ||
      !positive(gravity)) {
    throw std::invalid_argument("PlatformParams: all parameters must be finite and positive");
  }
}

Eigen::Vector2d thruster_direction(int i) {
  if (i < 0 || i >= kNumThrusters) throw std::invalid_argument("thruster index out of range");
  return {kDirX[i], kDirY[i]};
}

double thruster_torque_sign(int i) {
  if (i < 0 || i >= kNumThrusters) throw std::invalid_argument("thruster index out of range");
  return kTorqueSign[i];
}

BodyWrench body_wrench(const Control9& control, const PlatformParams& params) {
  BodyWrench w;
  for (int i = 0; i < kNumThrusters; ++i) {
    const double f = control[kF0 + i];
    w.fx += kDirX[i] * f;
    w.fy += kDirY[i] * f;
    w.torque += kTorqueSign[i] * params.thruster_arm * f;
  }
  return w;
}

State7 dynamics(const State7& state, const Control9& control,
                const PlatformParams& params) {
  if (!state.allFinite() || !control.allFinite()) {
    throw std::invalid_argument("dynamics: non-finite state or control");
  }
  const double c = std::cos(state[kTheta]);
  const double s = std::sin(state[kTheta]);
  const BodyWrench w = body_wrench(control, params);
  const double tau = control[kTau];

  State7 xdot;
  xdot[kX] = state[kVx];
  xdot[kY] = state[kVy];
  xdot[kTheta] = state[kThetaDot];
  xdot[kVx] = (c * w.fx - s * w.fy) / params.mass;
  xdot[kVy] = (s * w.fx + c * w.fy) / params.mass;
  xdot[kThetaDot] = (-tau + w.torque) / params.body_inertia;
  xdot[kOmegaRw] = tau / params.wheel_inertia;
  return xdot;
}

Linearization jacobians(const State7& state, const Control9& control,
                        const PlatformParams& params) {
  if (!state.allFinite() || !control.allFinite()) {
    throw std::invalid_argument("jacobians: non-finite state or control");
  }
  const double c = std::cos(state[kTheta]);
  const double s = std::sin(state[kTheta]);
  const BodyWrench w = body_wrench(control, params);

  Linearization lin;
  lin.A.setZero();
  lin.A(kX, kVx) = 1.0;
  lin.A(kY, kVy) = 1.0;
  lin.A(kTheta, kThetaDot) = 1.0;
  // d(world accel)/dtheta: rotating the body wrench by theta.
  lin.A(kVx, kTheta) = (-s * w.fx - c * w.fy) / params.mass;
  lin.A(kVy, kTheta) = (c * w.fx - s * w.fy) / params.mass;

  lin.B.setZero();
  lin.B(kThetaDot, kTau) = -1.0 / params.body_inertia;
  lin.B(kOmegaRw, kTau) = 1.0 / params.wheel_inertia;
  for (int i = 0; i < kNumThrusters; ++i) {
    const double wx = c * kDirX[i] - s * kDirY[i];
    const double wy = s * kDirX[i] + c * kDirY[i];
    lin.B(kVx, kF0 + i) = wx / params.mass;
    lin.B(kVy, kF0 + i) = wy / params.mass;
    lin.B(kThetaDot, kF0 + i) = kTorqueSign[i] * params.thruster_arm / params.body_inertia;
  }
  return lin;
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  // In-range angles pass through untouched; the fmod path would perturb
  // them by an ulp through the add/subtract of pi.
  if (angle > -std::numbers::pi && angle <= std::numbers::pi) return angle;
  double r = std::fmod(angle + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

}  // namespace floatgnc
