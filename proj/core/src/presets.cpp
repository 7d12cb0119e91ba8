#include "floatgnc/presets.hpp"

#include <stdexcept>

namespace floatgnc {

Preset Preset::simulation() {
  Preset p;
  p.name = "simulation";
  p.tracking = TvlqrWeights::simulation_tracking();
  p.regulation = TvlqrWeights::simulation_station_keeping();
  p.kf = KfConfig::defaults();
  p.fuel = FuelWeights::uniform();
  return p;
}

Preset Preset::real_system() {
  Preset p;
  p.name = "real-system";
  p.tracking = TvlqrWeights::real_system_tracking();
  p.regulation = TvlqrWeights::real_system_station_keeping();
  p.kf = KfConfig::defaults();
  p.fuel = FuelWeights::thruster_heavy();
  return p;
}

Preset Preset::by_name(const std::string& name) {
  if (name == "simulation") return simulation();
  if (name == "real-system") return real_system();
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected simulation or real-system)");
}

}  // namespace floatgnc
