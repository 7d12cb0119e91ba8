#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "floatgnc/platform.hpp"
#include "floatgnc/trajectory.hpp"

namespace floatgnc {

using Mat9x7 = Eigen::Matrix<double, 9, 7>;

/// Diagonal quadratic weights for the tracking regulator. q and q_final
/// weight the state error (running and terminal), r the control effort.
struct TvlqrWeights {
  Eigen::Matrix<double, 7, 1> q = Eigen::Matrix<double, 7, 1>::Ones();
  Eigen::Matrix<double, 9, 1> r = Eigen::Matrix<double, 9, 1>::Ones();
  Eigen::Matrix<double, 7, 1> q_final = Eigen::Matrix<double, 7, 1>::Ones();

  void validate() const;  // throws std::invalid_argument (r must be > 0, q >= 0)

  // Named weight sets. Each environment ships two: one for following a
  // trajectory and a stiffer one for station keeping about a rest pose
  // afterwards (on the real system the two coincide).
  static TvlqrWeights simulation_tracking();
  static TvlqrWeights simulation_station_keeping();
  static TvlqrWeights real_system_tracking();
  static TvlqrWeights real_system_station_keeping();
};

struct GainEntry {
  double t = 0.0;
  Mat9x7 gain = Mat9x7::Zero();     // K(t), feedback is u_ref - K * state error
  Mat7 cost_to_go = Mat7::Zero();   // S(t), symmetric PSD
  State7 x_ref = State7::Zero();
  Control9 u_ref = Control9::Zero();
};

/// Feedback gains on a uniform time grid starting at t = 0. Lookups are
/// zero-order hold; queries past the last entry keep returning it, which
/// turns the follower into a fixed-gain regulator about the final reference.
struct GainSchedule {
  std::vector<GainEntry> entries;

  double dt() const;  // grid spacing; 0 for fewer than two entries
  double final_time() const { return entries.empty() ? 0.0 : entries.back().t; }
  const GainEntry& entry_at(double t) const;
};

struct RiccatiOptions {
  double grid_hz = 100.0;  // gain storage rate
  int substeps = 10;       // RK4 substeps per grid interval
};

/// Integrates Sdot = -(A'S + SA - S B inv(R) B' S + Q) backward from
/// S(t_f) = diag(q_final) along the trajectory, storing S, K = inv(R) B' S
/// and the interpolated references on the grid. A(t), B(t) come from the
/// dynamics jacobians at the interpolated reference. S is symmetrized every
/// substep; a cost-to-go eigenvalue below -1e-8 aborts with std::runtime_error.
/// The grid step is t_f / ceil(t_f * grid_hz), i.e. at most 1/grid_hz and
/// landing exactly on t_f.
GainSchedule riccati_backward(const Trajectory& traj, const TvlqrWeights& weights,
                              const PlatformParams& params,
                              const RiccatiOptions& options = {});

/// Constant-gain regulator about a rest pose: runs the backward pass over a
/// stationary reference long enough for the cost-to-go to settle at its
/// stationary point, then keeps only the converged entry. The returned
/// schedule has a single entry at t = 0, so entry_at() holds it forever.
GainSchedule regulation_gains(const State7& x_ref, const TvlqrWeights& weights,
                              const PlatformParams& params, double horizon = 120.0,
                              const RiccatiOptions& options = {});

/// u = u_ref(t) - K(t) (x_est - x_ref(t)), with the angle error wrapped to
/// (-pi, pi]. Gains and references are zero-order held between grid points
/// and past the end of the schedule.
Control9 feedback(const GainSchedule& schedule, double t, const State7& x_est);

/// Cache key for a schedule: hash of the trajectory, the weights and the
/// grid rate, so a stale file is never reused for a different plan.
std::uint64_t gain_cache_key(const Trajectory& traj, const TvlqrWeights& weights,
                             const RiccatiOptions& options = {});

/// Columnar text format mirroring the trajectory files: a two-line header
/// carrying the cache key and entry count, then one row per grid point with
/// t, K (row major), S (row major), x_ref, u_ref at full double precision.
void write_gain_schedule(std::ostream& out, const GainSchedule& schedule,
                         std::uint64_t key);
GainSchedule read_gain_schedule(std::istream& in, std::uint64_t* key = nullptr);
void write_gain_schedule_file(const std::string& path, const GainSchedule& schedule,
                              std::uint64_t key);
GainSchedule read_gain_schedule_file(const std::string& path,
                                     std::uint64_t* key = nullptr);

}  // namespace floatgnc
