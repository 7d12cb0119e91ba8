#pragma once

#include <array>

#include <Eigen/Dense>

#include "floatgnc/platform.hpp"

namespace floatgnc {

/// Valve states for one modulator period. Each open valve delivers the
/// nominal force for the full period (the valves have no intermediate
/// positions, so the pulse quantum is exactly one period).
using ValveCommand = std::array<bool, kNumThrusters>;

using Thrust8 = Eigen::Matrix<double, 8, 1>;

struct SigmaDeltaConfig {
  double nominal_force = 10.0;  // N delivered by an open valve
  double sample_hz = 10.0;      // modulator (valve command) rate

  double period() const { return 1.0 / sample_hz; }
  /// Firing threshold: one full-force period of accumulated demand.
  double threshold() const { return nominal_force / sample_hz; }
  void validate() const;  // throws std::invalid_argument
};

/// Bank of per-thruster sigma-delta modulators. Each channel integrates the
/// error between the demanded and the delivered force and opens its valve
/// for one period as soon as the accumulated demand reaches one pulse worth
/// of impulse; the delivered impulse is then debited from the integrator.
/// By construction the delivered impulse trails the demanded integral by
/// less than one threshold at every period boundary.
class SigmaDeltaModulator {
 public:
  explicit SigmaDeltaModulator(const SigmaDeltaConfig& config = {});

  /// Advances all channels by one period. Demands must already be clamped
  /// to [0, nominal_force]; anything else (or non-finite) throws
  /// std::invalid_argument, clamping is the caller's duty.
  ValveCommand step(const Thrust8& demand);

  /// Accumulated demand per channel, in N s. Always in [0, threshold) at
  /// period boundaries.
  const Thrust8& integrators() const { return integrators_; }
  const ValveCommand& valves() const { return valves_; }
  const SigmaDeltaConfig& config() const { return config_; }

  void reset();

 private:
  SigmaDeltaConfig config_;
  Thrust8 integrators_ = Thrust8::Zero();
  ValveCommand valves_{};
};

}  // namespace floatgnc
