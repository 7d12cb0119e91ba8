#pragma once

#include <Eigen/Dense>

namespace floatgnc {

using State7 = Eigen::Matrix<double, 7, 1>;
using Control9 = Eigen::Matrix<double, 9, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat7x9 = Eigen::Matrix<double, 7, 9>;

// State layout: [x y theta xdot ydot thetadot omega_rw], world frame, rad, rad/s.
enum StateIndex : int {
  kX = 0,
  kY,
  kTheta,
  kVx,
  kVy,
  kThetaDot,
  kOmegaRw,
  kStateDim
};

// Control layout: [tau f0 f1 f2 f3 f4 f5 f6 f7]. tau is the reaction wheel
// motor torque, f0..f7 the thruster forces (binary valves on the real system,
// continuous in the planner relaxation).
enum ControlIndex : int { kTau = 0, kF0 = 1, kControlDim = 9 };

inline constexpr int kNumThrusters = 8;

/// Mass, inertia and actuator properties of the floating platform.
struct PlatformParams {
  double mass = 221.67;           // kg, full stack
  double body_inertia = 12.223;   // kg m^2, about the vertical axis
  double wheel_inertia = 0.047;   // kg m^2
  double thruster_arm = 0.35;     // m, lever arm of each nozzle about the center
  double nominal_thrust = 10.0;   // N per open valve
  double wheel_speed_max = 27.2;  // rad/s
  double wheel_torque_max = 0.2;  // N m
  double gravity = 9.81;          // m/s^2, used by the floor slope model

  void validate() const;  // throws std::invalid_argument on nonphysical values
};

/// Net thruster force in the body frame plus torque about the center.
struct BodyWrench {
  double fx = 0.0;      // N
  double fy = 0.0;      // N
  double torque = 0.0;  // N m, thruster contribution only
};

struct Linearization {
  Mat7 A;
  Mat7x9 B;
};

/// Body-frame unit force direction of thruster i (pairs of nozzles share an
/// axis: 0/5 push +y, 1/4 push -y, 3/6 push +x, 2/7 push -x).
Eigen::Vector2d thruster_direction(int i);

/// Sign of the torque thruster i produces about the center (+1 or -1).
double thruster_torque_sign(int i);

/// Sums thruster forces into a body-frame wrench. Ignores the tau channel.
BodyWrench body_wrench(const Control9& control, const PlatformParams& params);

/// Continuous-time dynamics xdot = f(x, u). The wheel torque reacts on the
/// body (tau spins the wheel up and the body down); thruster forces are
/// rotated into the world frame by theta. Throws on non-finite input.
State7 dynamics(const State7& state, const Control9& control,
                const PlatformParams& params);

/// Analytic A = df/dx, B = df/du at (state, control). Only the theta column
/// of A is state dependent.
Linearization jacobians(const State7& state, const Control9& control,
                        const PlatformParams& params);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

}  // namespace floatgnc
