#include "floatgnc/sigma_delta.hpp"

#include <cmath>
#include <stdexcept>

namespace floatgnc {

void SigmaDeltaConfig::validate() const {
  if (!(nominal_force > 0.0) || !(sample_hz > 0.0) ||
      !std::isfinite(nominal_force) || !std::isfinite(sample_hz)) {
    throw std::invalid_argument("sigma-delta config: force and rate must be positive");
  }
}

SigmaDeltaModulator::SigmaDeltaModulator(const SigmaDeltaConfig& config)
    : config_(config) {
  config_.validate();
  valves_.fill(false);
}

ValveCommand SigmaDeltaModulator::step(const Thrust8& demand) {
  for (int i = 0; i < kNumThrusters; ++i) {
    const double u = demand[i];
    if (!std::isfinite(u) || u < 0.0 || u > config_.nominal_force) {
      throw std::invalid_argument("sigma-delta: demand outside [0, nominal force]");
    }
  }
  const double dt = config_.period();
  const double eps = config_.threshold();
  for (int i = 0; i < kNumThrusters; ++i) {
    // Integrate the error between demand and delivered output. The delivered
    // side of the error is folded into the threshold debit: an open valve
    // removes exactly one pulse of impulse, f_nom * dt = eps.
    double w = integrators_[i] + demand[i] * dt;
    const bool open = w >= eps;
    if (open) w -= eps;
    if (w < 0.0) w = 0.0;
    integrators_[i] = w;
    valves_[i] = open;
  }
  return valves_;
}

void SigmaDeltaModulator::reset() {
  integrators_.setZero();
  valves_.fill(false);
}

}  // namespace floatgnc
