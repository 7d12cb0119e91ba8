#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "floatgnc/platform.hpp"

namespace floatgnc {

struct Knot {
  double t = 0.0;
  State7 state = State7::Zero();
  Control9 control = Control9::Zero();
};

/// Uniformly spaced knot sequence. A single knot (t_final == 0) is the
/// degenerate "hold this state" trajectory.
struct Trajectory {
  std::vector<Knot> knots;

  static Trajectory hold_at(const State7& state);

  int num_knots() const { return static_cast<int>(knots.size()); }
  double final_time() const { return knots.empty() ? 0.0 : knots.back().t; }
  double dt() const;  // knot spacing; 0 for fewer than two knots

  /// Throws std::runtime_error unless knots start at t=0 and are uniformly,
  /// strictly monotonically spaced.
  void validate_grid() const;

  /// Reference state at time t. Piecewise cubic Hermite using the dynamics
  /// at the surrounding knots as end slopes; clamps outside [0, t_final].
  State7 state_at(double t, const PlatformParams& params) const;

  /// Reference control at time t, linear between knots, clamped at the ends.
  Control9 control_at(double t) const;
};

/// Columnar text format: one header line naming the 17 columns
/// (t, 7 state, 9 control), then one row per knot, full double precision.
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in);
void write_trajectory_file(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_file(const std::string& path);

/// FNV-1a over the canonical serialization; used to key gain caches.
std::uint64_t trajectory_hash(const Trajectory& traj);

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace floatgnc
