#pragma once

#include <string>

#include "floatgnc/collocation.hpp"
#include "floatgnc/estimator.hpp"
#include "floatgnc/platform.hpp"
#include "floatgnc/sigma_delta.hpp"
#include "floatgnc/simworld.hpp"
#include "floatgnc/tvlqr.hpp"

namespace floatgnc {

/// One coherent bundle of module tunings. "simulation" carries the weight
/// set used for the simulation study; "real-system" the set tuned on the
/// physical platform (identical filter, softer feedback, thruster-averse
/// fuel cost).
struct Preset {
  std::string name;
  PlatformParams params;
  TvlqrWeights tracking;
  TvlqrWeights regulation;
  KfConfig kf;
  SigmaDeltaConfig modulator;
  FuelWeights fuel;
  NoiseVariances noise;
  RiccatiOptions riccati;

  static Preset simulation();
  static Preset real_system();
  /// Accepts "simulation" or "real-system"; throws std::invalid_argument.
  static Preset by_name(const std::string& name);
};

}  // namespace floatgnc
