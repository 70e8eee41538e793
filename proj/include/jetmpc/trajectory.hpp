#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace jetmpc {

struct Waypoint {
  double t = 0.0;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
};

struct TrajectorySample {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
};

/// Piecewise quintic through waypoints, rest-to-rest on every segment. Held
/// constant before the first and after the last waypoint.
class MinJerkTrajectory {
 public:
  explicit MinJerkTrajectory(std::vector<Waypoint> waypoints) : wp_(std::move(waypoints)) {
    detail::require(wp_.size() >= 2, "min_jerk_trajectory: need at least two waypoints");
    for (std::size_t i = 0; i < wp_.size(); ++i) {
      detail::require(wp_[i].x.allFinite(), "min_jerk_trajectory: non-finite waypoint");
      if (i > 0) {
        detail::require(wp_[i].t > wp_[i - 1].t,
                        "min_jerk_trajectory: waypoint times must be strictly increasing");
      }
    }
  }

  const std::vector<Waypoint>& waypoints() const { return wp_; }
  double start_time() const { return wp_.front().t; }
  double end_time() const { return wp_.back().t; }

  TrajectorySample sample(double t) const {
    TrajectorySample out;
    if (t <= wp_.front().t) {
      out.position = wp_.front().x;
      return out;
    }
    if (t >= wp_.back().t) {
      out.position = wp_.back().x;
      return out;
    }
    const auto it = std::upper_bound(wp_.begin(), wp_.end(), t,
                                     [](double v, const Waypoint& w) { return v < w.t; });
    const Waypoint& b = *it;
    const Waypoint& a = *(it - 1);
    const double dur = b.t - a.t;
    const double s = (t - a.t) / dur;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const Eigen::Vector3d delta = b.x - a.x;
    out.position = a.x + delta * (10.0 * s3 - 15.0 * s4 + 6.0 * s5);
    out.velocity = delta * (30.0 * s2 - 60.0 * s3 + 30.0 * s4) / dur;
    out.acceleration = delta * (60.0 * s - 180.0 * s2 + 120.0 * s3) / (dur * dur);
    return out;
  }

 private:
  std::vector<Waypoint> wp_;
};

}  // namespace jetmpc
