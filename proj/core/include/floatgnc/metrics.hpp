#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <string>

#include "floatgnc/platform.hpp"
#include "floatgnc/simworld.hpp"

namespace floatgnc {

/// Pose + velocity tolerances of the "arrived and at rest" predicate.
struct SuccessThresholds {
  double linear = 0.05;            // m
  double linear_velocity = 0.05;   // m/s
  double angular = 0.05;           // rad
  double angular_velocity = 0.05;  // rad/s

  void validate() const;  // throws std::invalid_argument
};

/// Per-episode outcome metrics, all recomputable from the SimLog alone.
struct EpisodeReport {
  bool success = false;
  // Start of the first window where the success predicate held for the whole
  // debounce interval; NaN when the episode never succeeded.
  double time_to_success = std::numeric_limits<double>::quiet_NaN();
  double mean_euclidean_error = 0.0;  // m, truth vs reference, episode average
  double mean_angular_error = 0.0;    // rad, wrapped, episode average
  std::array<double, kNumThrusters> thruster_on_time{};  // s
  double total_on_time = 0.0;                            // s
  double max_position_error = 0.0;  // m, worst truth-vs-reference distance
  double max_heading_error = 0.0;   // rad, worst wrapped heading error
};

/// True when the tick's truth satisfies all four thresholds about `target`.
bool success_predicate(const SimTick& tick, const State7& target,
                       const SuccessThresholds& thresholds);

/// Evaluates an episode log: the success predicate is checked on the truth
/// at every executive tick against the final reference pose, and success
/// requires it to hold for `debounce` consecutive seconds (time-to-success is
/// the start of the first such window). Errors average truth against the
/// per-tick reference. Throws std::invalid_argument on an empty log.
EpisodeReport compute_report(const SimLog& log, const SuccessThresholds& thresholds,
                             double debounce = 1.0);

/// Key-value report serialization (config-file syntax, exact round-trip).
void write_report(std::ostream& out, const EpisodeReport& report);
void write_report_file(const std::string& path, const EpisodeReport& report);
EpisodeReport read_report(std::istream& in);  // throws std::runtime_error
EpisodeReport read_report_file(const std::string& path);

}  // namespace floatgnc
