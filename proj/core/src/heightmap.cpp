#include "floatgnc/heightmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "floatgnc/rng.hpp"

namespace floatgnc {

void Heightmap::validate() const {
  if (nx < 2 || ny < 2) throw std::invalid_argument("heightmap: need a 2x2 grid at least");
  if (!(cell > 0.0) || !std::isfinite(cell)) {
    throw std::invalid_argument("heightmap: cell size must be positive");
  }
  if (!std::isfinite(x0) || !std::isfinite(y0)) {
    throw std::invalid_argument("heightmap: non-finite origin");
  }
  if (h.size() != static_cast<size_t>(nx) * static_cast<size_t>(ny)) {
    throw std::invalid_argument("heightmap: node count does not match grid dims");
  }
  for (double v : h) {
    if (!std::isfinite(v)) throw std::invalid_argument("heightmap: non-finite height");
  }
}

bool Heightmap::contains(double x, double y) const {
  return x >= x0 && x <= x0 + width() && y >= y0 && y <= y0 + height_extent();
}

namespace {

struct CellRef {
  int ix, iy;    // lower-left node
  double u, v;   // fractional position within the cell, in [0, 1]
};

CellRef locate(const Heightmap& m, double x, double y) {
  const double fx = (x - m.x0) / m.cell;
  const double fy = (y - m.y0) / m.cell;
  int ix = static_cast<int>(std::floor(fx));
  int iy = static_cast<int>(std::floor(fy));
  ix = std::clamp(ix, 0, m.nx - 2);
  iy = std::clamp(iy, 0, m.ny - 2);
  return {ix, iy, fx - ix, fy - iy};
}

}  // namespace

double Heightmap::height(double x, double y) const {
  if (!contains(x, y)) return 0.0;
  const CellRef c = locate(*this, x, y);
  const double h00 = h[static_cast<size_t>(c.iy) * nx + c.ix];
  const double h10 = h[static_cast<size_t>(c.iy) * nx + c.ix + 1];
  const double h01 = h[static_cast<size_t>(c.iy + 1) * nx + c.ix];
  const double h11 = h[static_cast<size_t>(c.iy + 1) * nx + c.ix + 1];
  return h00 * (1.0 - c.u) * (1.0 - c.v) + h10 * c.u * (1.0 - c.v) +
         h01 * (1.0 - c.u) * c.v + h11 * c.u * c.v;
}

Eigen::Vector2d Heightmap::gradient(double x, double y, bool* inside) const {
  if (!contains(x, y)) {
    if (inside) *inside = false;
    return Eigen::Vector2d::Zero();
  }
  if (inside) *inside = true;
  const CellRef c = locate(*this, x, y);
  const double h00 = h[static_cast<size_t>(c.iy) * nx + c.ix];
  const double h10 = h[static_cast<size_t>(c.iy) * nx + c.ix + 1];
  const double h01 = h[static_cast<size_t>(c.iy + 1) * nx + c.ix];
  const double h11 = h[static_cast<size_t>(c.iy + 1) * nx + c.ix + 1];
  const double gx = ((h10 - h00) * (1.0 - c.v) + (h11 - h01) * c.v) / cell;
  const double gy = ((h01 - h00) * (1.0 - c.u) + (h11 - h10) * c.u) / cell;
  return {gx, gy};
}

double Heightmap::max_gradient_norm() const {
  // Within a cell dh/dx is linear in v alone and dh/dy linear in u alone, so
  // |grad|^2 is convex separately in u and v and attains its maximum at one
  // of the four cell corners.
  double worst_sq = 0.0;
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const double h00 = h[static_cast<size_t>(iy) * nx + ix];
      const double h10 = h[static_cast<size_t>(iy) * nx + ix + 1];
      const double h01 = h[static_cast<size_t>(iy + 1) * nx + ix];
      const double h11 = h[static_cast<size_t>(iy + 1) * nx + ix + 1];
      const double gx[2] = {(h10 - h00) / cell, (h11 - h01) / cell};  // at v = 0, 1
      const double gy[2] = {(h01 - h00) / cell, (h11 - h10) / cell};  // at u = 0, 1
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          worst_sq = std::max(worst_sq, gx[b] * gx[b] + gy[a] * gy[a]);
        }
      }
    }
  }
  return std::sqrt(worst_sq);
}

namespace {

Heightmap grid_covering(double half_x, double half_y, double cell) {
  if (!(half_x > 0.0) || !(half_y > 0.0) || !(cell > 0.0)) {
    throw std::invalid_argument("heightmap: extents and cell size must be positive");
  }
  Heightmap m;
  m.cell = cell;
  m.nx = static_cast<int>(std::ceil(2.0 * half_x / cell)) + 1;
  m.ny = static_cast<int>(std::ceil(2.0 * half_y / cell)) + 1;
  m.x0 = -0.5 * (m.nx - 1) * cell;
  m.y0 = -0.5 * (m.ny - 1) * cell;
  m.h.assign(static_cast<size_t>(m.nx) * static_cast<size_t>(m.ny), 0.0);
  return m;
}

}  // namespace

Heightmap Heightmap::flat(double half_x, double half_y, double cell) {
  return grid_covering(half_x, half_y, cell);
}

Heightmap Heightmap::uniform_slope(const Eigen::Vector2d& slope, double half_x,
                                   double half_y, double cell) {
  Heightmap m = grid_covering(half_x, half_y, cell);
  for (int iy = 0; iy < m.ny; ++iy) {
    for (int ix = 0; ix < m.nx; ++ix) {
      const double x = m.x0 + ix * cell;
      const double y = m.y0 + iy * cell;
      m.h[static_cast<size_t>(iy) * m.nx + ix] = slope.x() * x + slope.y() * y;
    }
  }
  return m;
}

Heightmap Heightmap::random_field(double max_slope, double half_x, double half_y,
                                  double cell, std::uint64_t seed) {
  if (!(max_slope >= 0.0)) throw std::invalid_argument("heightmap: negative max slope");
  Heightmap m = grid_covering(half_x, half_y, cell);
  Rng rng(seed);
  // A handful of long-wavelength cosine waves gives a smooth undulating
  // floor; the exact amplitude is irrelevant because the field is rescaled
  // to the requested maximum gradient afterwards.
  constexpr int kWaves = 6;
  const double span = std::max(m.width(), m.height_extent());
  double wx[kWaves], wy[kWaves], phase[kWaves], amp[kWaves];
  for (int k = 0; k < kWaves; ++k) {
    const double wavelength = rng.uniform(0.5 * span, 1.5 * span);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double omega = 2.0 * std::numbers::pi / wavelength;
    wx[k] = omega * std::cos(heading);
    wy[k] = omega * std::sin(heading);
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    amp[k] = rng.uniform(0.5, 1.0);
  }
  for (int iy = 0; iy < m.ny; ++iy) {
    for (int ix = 0; ix < m.nx; ++ix) {
      const double x = m.x0 + ix * cell;
      const double y = m.y0 + iy * cell;
      double v = 0.0;
      for (int k = 0; k < kWaves; ++k) {
        v += amp[k] * std::cos(wx[k] * x + wy[k] * y + phase[k]);
      }
      m.h[static_cast<size_t>(iy) * m.nx + ix] = v;
    }
  }
  const double current = m.max_gradient_norm();
  const double scale = current > 0.0 ? max_slope / current : 0.0;
  for (double& v : m.h) v *= scale;
  return m;
}

Eigen::Vector2d slope_force(const Eigen::Vector2d& position, const Heightmap& map,
                            const PlatformParams& params, bool* inside) {
  const Eigen::Vector2d g = map.gradient(position.x(), position.y(), inside);
  return -params.mass * params.gravity * g;
}

}  // namespace floatgnc
