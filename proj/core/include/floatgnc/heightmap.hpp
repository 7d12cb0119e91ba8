#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "floatgnc/platform.hpp"

namespace floatgnc {

/// Gridded floor-height field. Heights live on a regular node grid and are
/// bilinearly interpolated inside each cell, so the surface is continuous
/// and the gradient is bounded by the steepest node-to-node difference.
struct Heightmap {
  int nx = 2;          // node count along x, >= 2
  int ny = 2;          // node count along y, >= 2
  double cell = 1.0;   // node spacing, m
  double x0 = 0.0;     // world x of node (0, 0)
  double y0 = 0.0;     // world y of node (0, 0)
  std::vector<double> h;  // node heights, m, h[iy * nx + ix]

  void validate() const;  // throws std::invalid_argument

  double width() const { return (nx - 1) * cell; }
  double height_extent() const { return (ny - 1) * cell; }
  bool contains(double x, double y) const;

  /// Bilinear surface height. Positions outside the map return 0.
  double height(double x, double y) const;

  /// Bilinear surface gradient (dh/dx, dh/dy). Outside the map the gradient
  /// is zero and *inside (when given) is set to false.
  Eigen::Vector2d gradient(double x, double y, bool* inside = nullptr) const;

  /// Exact maximum of |gradient| over the whole map (the bilinear gradient
  /// magnitude is maximized at cell corners).
  double max_gradient_norm() const;

  /// Level floor covering [-half_x, half_x] x [-half_y, half_y].
  static Heightmap flat(double half_x, double half_y, double cell);

  /// Plane with constant gradient `slope` (m per m).
  static Heightmap uniform_slope(const Eigen::Vector2d& slope, double half_x,
                                 double half_y, double cell);

  /// Smooth low-frequency random undulation, rescaled so the maximum surface
  /// gradient equals max_slope. Deterministic in the seed.
  static Heightmap random_field(double max_slope, double half_x, double half_y,
                                double cell, std::uint64_t seed);
};

/// In-plane force the floor exerts on the platform through the gravity
/// component along the local slope: F = -m g grad h (small-slope model).
/// Outside the map the force is zero and *inside (when given) is false.
Eigen::Vector2d slope_force(const Eigen::Vector2d& position, const Heightmap& map,
                            const PlatformParams& params, bool* inside = nullptr);

}  // namespace floatgnc
