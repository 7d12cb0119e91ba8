#include "floatgnc/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "floatgnc/config.hpp"

namespace floatgnc {

void SuccessThresholds::validate() const {
  for (double v : {linear, linear_velocity, angular, angular_velocity}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("success thresholds must be positive");
    }
  }
}

bool success_predicate(const SimTick& tick, const State7& target,
                       const SuccessThresholds& thresholds) {
  const double ex = tick.truth[kX] - target[kX];
  const double ey = tick.truth[kY] - target[kY];
  const double evx = tick.truth[kVx] - target[kVx];
  const double evy = tick.truth[kVy] - target[kVy];
  const double etheta = wrap_angle(tick.truth[kTheta] - target[kTheta]);
  const double ethetadot = tick.truth[kThetaDot] - target[kThetaDot];
  return std::hypot(ex, ey) < thresholds.linear &&
         std::hypot(evx, evy) < thresholds.linear_velocity &&
         std::abs(etheta) < thresholds.angular &&
         std::abs(ethetadot) < thresholds.angular_velocity;
}

EpisodeReport compute_report(const SimLog& log, const SuccessThresholds& thresholds,
                             double debounce) {
  thresholds.validate();
  if (log.ticks.empty()) throw std::invalid_argument("episode report: empty log");
  if (!(debounce >= 0.0) || !std::isfinite(debounce)) {
    throw std::invalid_argument("episode report: bad debounce");
  }

  const State7 target = log.ticks.back().reference;
  const double est_dt = log.estimator_period();

  EpisodeReport report;
  double sum_pos = 0.0;
  double sum_ang = 0.0;
  double window_start = -1.0;
  for (const auto& tick : log.ticks) {
    const double ex = tick.truth[kX] - tick.reference[kX];
    const double ey = tick.truth[kY] - tick.reference[kY];
    const double pos_err = std::hypot(ex, ey);
    const double ang_err =
        std::abs(wrap_angle(tick.truth[kTheta] - tick.reference[kTheta]));
    sum_pos += pos_err;
    sum_ang += ang_err;
    report.max_position_error = std::max(report.max_position_error, pos_err);
    report.max_heading_error = std::max(report.max_heading_error, ang_err);

    for (int i = 0; i < kNumThrusters; ++i) {
      if (tick.valves[i]) {
        report.thruster_on_time[i] += est_dt;
        report.total_on_time += est_dt;
      }
    }

    if (success_predicate(tick, target, thresholds)) {
      if (window_start < 0.0) window_start = tick.t;
      // A window is complete once it spans the debounce interval; the small
      // epsilon keeps accumulated tick times from missing it by one ulp.
      if (!report.success && tick.t - window_start >= debounce - 1e-9) {
        report.success = true;
        report.time_to_success = window_start;
      }
    } else {
      window_start = -1.0;
    }
  }
  const double n = static_cast<double>(log.ticks.size());
  report.mean_euclidean_error = sum_pos / n;
  report.mean_angular_error = sum_ang / n;
  return report;
}

void write_report(std::ostream& out, const EpisodeReport& report) {
  Config c;
  c.set_bool("success", report.success);
  c.set_double("time_to_success", report.time_to_success);
  c.set_double("mean_euclidean_error", report.mean_euclidean_error);
  c.set_double("mean_angular_error", report.mean_angular_error);
  for (int i = 0; i < kNumThrusters; ++i) {
    c.set_double("thruster_" + std::to_string(i) + "_on_time",
                 report.thruster_on_time[i]);
  }
  c.set_double("total_on_time", report.total_on_time);
  c.set_double("max_position_error", report.max_position_error);
  c.set_double("max_heading_error", report.max_heading_error);
  out << c.serialize();
}

void write_report_file(const std::string& path, const EpisodeReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot open " + path + " for writing");
  write_report(out, report);
  if (!out) throw std::runtime_error("report: write to " + path + " failed");
}

EpisodeReport read_report(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const Config c = Config::parse(buffer.str());
  EpisodeReport report;
  report.success = c.get_bool("success");
  report.time_to_success = c.get_double("time_to_success");
  report.mean_euclidean_error = c.get_double("mean_euclidean_error");
  report.mean_angular_error = c.get_double("mean_angular_error");
  for (int i = 0; i < kNumThrusters; ++i) {
    report.thruster_on_time[i] =
        c.get_double("thruster_" + std::to_string(i) + "_on_time");
  }
  report.total_on_time = c.get_double("total_on_time");
  report.max_position_error = c.get_double("max_position_error");
  report.max_heading_error = c.get_double("max_heading_error");
  return report;
}

EpisodeReport read_report_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  return read_report(in);
}

}  // namespace floatgnc
