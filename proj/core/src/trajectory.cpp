#include "floatgnc/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "floatgnc/config.hpp"

namespace floatgnc {

namespace {

const char* kColumns[17] = {"t",  "x",  "y",  "theta", "xdot", "ydot",
                            "thetadot", "omega_rw", "tau",   "f0",   "f1",
                            "f2", "f3", "f4", "f5",    "f6",   "f7"};

}  // namespace

Trajectory Trajectory::hold_at(const State7& state) {
  Trajectory t;
  t.knots.push_back(Knot{0.0, state, Control9::Zero()});
  return t;
}

double Trajectory::dt() const {
  if (knots.size() < 2) return 0.0;
  return knots[1].t - knots[0].t;
}

void Trajectory::validate_grid() const {
  if (knots.empty()) throw std::runtime_error("trajectory: no knots");
  if (std::abs(knots[0].t) > 1e-12) throw std::runtime_error("trajectory: first knot must be at t=0");
  if (knots.size() < 2) return;
  const double h = dt();
  if (!(h > 0.0)) throw std::runtime_error("trajectory: knot spacing must be positive");
  for (size_t k = 1; k < knots.size(); ++k) {
    const double expected = static_cast<double>(k) * h;
    if (std::abs(knots[k].t - expected) > 1e-9 * std::max(1.0, expected)) {
      throw std::runtime_error("trajectory: knots are not uniformly spaced");
    }
  }
  for (const auto& k : knots) {
    if (!k.state.allFinite() || !k.control.allFinite() || !std::isfinite(k.t)) {
      throw std::runtime_error("trajectory: non-finite knot");
    }
  }
}

State7 Trajectory::state_at(double t, const PlatformParams& params) const {
  if (knots.empty()) throw std::runtime_error("trajectory: no knots");
  if (t <= knots.front().t || knots.size() == 1) return knots.front().state;
  if (t >= final_time()) return knots.back().state;

  const double h = dt();
  const int i = std::min(static_cast<int>(std::floor((t - knots[0].t) / h)),
                         num_knots() - 2);
  const Knot& a = knots[i];
  const Knot& b = knots[i + 1];
  const double s = (t - a.t) / h;

  const State7 fa = dynamics(a.state, a.control, params);
  const State7 fb = dynamics(b.state, b.control, params);

  // Cubic Hermite basis.
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * a.state + h10 * h * fa + h01 * b.state + h11 * h * fb;
}

Control9 Trajectory::control_at(double t) const {
  if (knots.empty()) throw std::runtime_error("trajectory: no knots");
  if (t <= knots.front().t || knots.size() == 1) return knots.front().control;
  if (t >= final_time()) return knots.back().control;
  const double h = dt();
  const int i = std::min(static_cast<int>(std::floor((t - knots[0].t) / h)),
                         num_knots() - 2);
  const double s = (t - knots[i].t) / h;
  return (1.0 - s) * knots[i].control + s * knots[i + 1].control;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  for (int c = 0; c < 17; ++c) out << (c ? " " : "") << kColumns[c];
  out << "\n";
  for (const auto& k : traj.knots) {
    out << format_double(k.t);
    for (int i = 0; i < kStateDim; ++i) out << " " << format_double(k.state[i]);
    for (int i = 0; i < kControlDim; ++i) out << " " << format_double(k.control[i]);
    out << "\n";
  }
}

Trajectory read_trajectory(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("trajectory: empty stream");
  {
    std::istringstream hs(header);
    std::string name;
    for (int c = 0; c < 17; ++c) {
      if (!(hs >> name) || name != kColumns[c]) {
        throw std::runtime_error("trajectory: bad header, expected column '" +
                                 std::string(kColumns[c]) + "'");
      }
    }
  }
  Trajectory traj;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Knot k;
    ls >> k.t;
    for (int i = 0; i < kStateDim; ++i) ls >> k.state[i];
    for (int i = 0; i < kControlDim; ++i) ls >> k.control[i];
    if (ls.fail()) {
      throw std::runtime_error("trajectory: malformed row at line " + std::to_string(lineno));
    }
    traj.knots.push_back(k);
  }
  traj.validate_grid();
  return traj;
}

void write_trajectory_file(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trajectory: cannot write '" + path + "'");
  write_trajectory(out, traj);
}

Trajectory read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trajectory: cannot open '" + path + "'");
  return read_trajectory(in);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t trajectory_hash(const Trajectory& traj) {
  std::ostringstream ss;
  write_trajectory(ss, traj);
  const std::string s = ss.str();
  return fnv1a(s.data(), s.size());
}

}  // namespace floatgnc
