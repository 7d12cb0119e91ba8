#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "floatgnc/metrics.hpp"
#include "floatgnc/presets.hpp"
#include "floatgnc/simworld.hpp"
#include "floatgnc/trajectory.hpp"

namespace floatgnc {

/// Randomized spawn-and-return study: each episode samples a spawn pose,
/// plans to the origin and follows the plan in closed loop until the time
/// limit.
struct MonteCarloSpec {
  int episodes = 20;
  double x_range = 2.0;      // spawn x ~ U[-x_range, x_range], m
  double y_range = 4.0;      // spawn y ~ U[-y_range, y_range], m
  double theta_range = 3.141592653589793;  // spawn heading ~ U[-r, r], rad
  int knots = 100;
  double alpha = 1.5;        // fuel-phase time dilation
  double time_limit = 140.0; // episode duration and success deadline, s
  std::uint64_t master_seed = 1;
  int workers = 0;           // concurrent episodes; 0 = hardware concurrency
  SuccessThresholds thresholds;
  double debounce = 1.0;     // s the success predicate must hold

  void validate() const;  // throws std::invalid_argument
};

struct EpisodeOutcome {
  int index = 0;
  std::uint64_t seed = 0;     // per-episode stream seed
  State7 spawn = State7::Zero();
  bool completed = false;     // planned and simulated without module errors
  std::string error;          // failure description when !completed
  double tf_star = 0.0;       // time-optimal horizon of the plan
  double tf = 0.0;            // followed (fuel-phase) horizon
  double plan_fuel_cost = 0.0;
  EpisodeReport report;
};

struct MonteCarloResult {
  std::vector<EpisodeOutcome> episodes;
  int success_count = 0;
  int failure_count = 0;  // planning or simulation failures
  double max_time_to_success = 0.0;   // over successful episodes
  double mean_time_to_success = 0.0;  // over successful episodes

  bool all_succeeded() const {
    return success_count == static_cast<int>(episodes.size());
  }
};

/// Called once per finished episode (possibly from a worker thread; episodes
/// are distinct so per-episode file writes need no locking).
using EpisodeSink =
    std::function<void(const EpisodeOutcome&, const Trajectory&, const SimLog&)>;

/// Runs the study. Episodes execute concurrently up to spec.workers, each on
/// its own RNG stream derived from (master seed, episode index), so results
/// do not depend on scheduling. Aggregation happens after all workers join.
MonteCarloResult run_monte_carlo(const MonteCarloSpec& spec, const Preset& preset,
                                 const Heightmap& map = Heightmap::flat(6.0, 8.0, 0.5),
                                 const EpisodeSink& sink = {});

}  // namespace floatgnc
