#include "floatgnc/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "floatgnc/planner.hpp"
#include "floatgnc/rng.hpp"

namespace floatgnc {

void MonteCarloSpec::validate() const {
  if (episodes < 1) throw std::invalid_argument("monte carlo: need at least 1 episode");
  for (double r : {x_range, y_range, theta_range}) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("monte carlo: spawn ranges must be non-negative");
    }
  }
  if (knots < 2) throw std::invalid_argument("monte carlo: need at least 2 knots");
  if (!(alpha >= 1.0)) throw std::invalid_argument("monte carlo: alpha must be >= 1");
  if (!(time_limit > 0.0) || !std::isfinite(time_limit)) {
    throw std::invalid_argument("monte carlo: time limit must be positive");
  }
  if (workers < 0) throw std::invalid_argument("monte carlo: negative worker count");
  thresholds.validate();
  if (!(debounce >= 0.0) || !std::isfinite(debounce)) {
    throw std::invalid_argument("monte carlo: bad debounce");
  }
}

namespace {

EpisodeOutcome run_one(int index, const MonteCarloSpec& spec, const Preset& preset,
                       const Heightmap& map, const EpisodeSink& sink) {
  EpisodeOutcome outcome;
  outcome.index = index;
  outcome.seed = Rng::derive(spec.master_seed, static_cast<std::uint64_t>(index));

  Rng rng(outcome.seed);
  outcome.spawn[kX] = rng.uniform(-spec.x_range, spec.x_range);
  outcome.spawn[kY] = rng.uniform(-spec.y_range, spec.y_range);
  outcome.spawn[kTheta] = rng.uniform(-spec.theta_range, spec.theta_range);

  try {
    PlanOptions options;
    options.n_knots = spec.knots;
    options.alpha = spec.alpha;
    options.fuel_weights = preset.fuel;
    const BoundarySpec boundary =
        BoundarySpec::rest_to_rest(outcome.spawn, State7::Zero(), preset.params);
    const PlanResult plan = plan_two_phase(preset.params, boundary, options);
    outcome.tf_star = plan.tf_star;
    outcome.tf = plan.trajectory.final_time();
    outcome.plan_fuel_cost = plan.fuel_cost;

    EpisodeSetup setup;
    setup.trajectory = plan.trajectory;
    setup.initial_truth = outcome.spawn;
    setup.params = preset.params;
    setup.sim.duration = spec.time_limit;
    setup.sim.noise = preset.noise;
    setup.sim.seed = Rng::derive(outcome.seed, 1);
    setup.map = map;
    setup.tracking = preset.tracking;
    setup.regulation = preset.regulation;
    setup.riccati = preset.riccati;
    setup.kf = preset.kf;
    setup.modulator = preset.modulator;
    const SimLog log = run_episode(setup);

    outcome.report = compute_report(log, spec.thresholds, spec.debounce);
    outcome.completed = true;
    if (sink) sink(outcome, plan.trajectory, log);
  } catch (const std::exception& e) {
    outcome.completed = false;
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace

MonteCarloResult run_monte_carlo(const MonteCarloSpec& spec, const Preset& preset,
                                 const Heightmap& map, const EpisodeSink& sink) {
  spec.validate();
  preset.params.validate();
  map.validate();

  MonteCarloResult result;
  result.episodes.resize(static_cast<size_t>(spec.episodes));

  int workers = spec.workers > 0
                    ? spec.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, spec.episodes));

  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int index = next.fetch_add(1);
      if (index >= spec.episodes) break;
      result.episodes[static_cast<size_t>(index)] =
          run_one(index, spec, preset, map, sink);
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }

  double sum_time = 0.0;
  for (const auto& episode : result.episodes) {
    if (!episode.completed) {
      ++result.failure_count;
      continue;
    }
    if (episode.report.success) {
      ++result.success_count;
      sum_time += episode.report.time_to_success;
      result.max_time_to_success =
          std::max(result.max_time_to_success, episode.report.time_to_success);
    }
  }
  if (result.success_count > 0) {
    result.mean_time_to_success = sum_time / result.success_count;
  }
  return result;
}

}  // namespace floatgnc
