#pragma once

// Second-order jet thrust model
//
//   Tddot = h(T, Tdot) + g(T, Tdot) * v,     v = e0 + e1 * u_th
//   h = c1 T + c2 Tdot + c3 T^2 + c4 T Tdot + c5 Tdot^2
//   g = d0 + d1 T + d2 Tdot

#include <algorithm>
#include <array>
#include <cmath>

#include "errors.hpp"

namespace jetmpc {

struct JetParams {
  std::array<double, 5> c{};  ///< drift coefficients c1..c5
  std::array<double, 3> d{};  ///< gain coefficients d0..d2
  double e0 = 0.0;
  double e1 = 1.0;
  double t_max = 220.0;      ///< N
  double tdot_max = 200.0;   ///< N/s, bounds the box on which g is checked
  double v_min = 0.0;
  double v_max = 160.0;

  double drift(double t, double tdot) const {
    return c[0] * t + c[1] * tdot + c[2] * t * t + c[3] * t * tdot + c[4] * tdot * tdot;
  }

  double gain(double t, double tdot) const { return d[0] + d[1] * t + d[2] * tdot; }

  /// g is affine in (T, Tdot), so it is bounded away from zero on the box
  /// iff all four corners share a sign and exceed the threshold.
  void validate() const {
    detail::require(e1 != 0.0 && std::isfinite(e1), "jets.e1 must be nonzero");
    detail::require(v_min < v_max, "jets.v_bounds: v_min < v_max violated");
    detail::require(t_max > 0.0, "jets.t_max must be positive");
    const double corners[4] = {gain(0.0, -tdot_max), gain(0.0, tdot_max),
                               gain(t_max, -tdot_max), gain(t_max, tdot_max)};
    const bool positive = corners[0] > 0.0;
    for (double g : corners) {
      detail::require((g > 0.0) == positive && std::abs(g) >= 1e-6,
                      "jets: gain g(T, Tdot) must stay away from zero on the operating box");
    }
  }
};

/// Linear second-order jet: Tddot = wn^2 (v - T) - 2 zeta wn Tdot.
inline JetParams linear_jet_params(double omega_n = 2.0, double zeta = 0.9) {
  JetParams p;
  p.c = {-omega_n * omega_n, -2.0 * zeta * omega_n, 0.0, 0.0, 0.0};
  p.d = {omega_n * omega_n, 0.0, 0.0};
  return p;
}

/// Time-scales the jet response by `speed`: Tddot' = speed^2 (h + g v) evaluated
/// at Tdot / speed. For the linear family this multiplies omega_n by `speed`.
inline JetParams time_scaled(const JetParams& p, double speed) {
  JetParams q = p;
  const double k2 = speed * speed;
  q.c = {p.c[0] * k2, p.c[1] * speed, p.c[2] * k2, p.c[3] * speed, p.c[4]};
  q.d = {p.d[0] * k2, p.d[1] * k2, p.d[2] * speed};
  return q;
}

inline double jet_accel(const JetParams& p, double t, double tdot, double v) {
  return p.drift(t, tdot) + p.gain(t, tdot) * v;
}

inline double v_from_throttle(const JetParams& p, double u_th) { return p.e0 + p.e1 * u_th; }

inline double throttle_from_v(const JetParams& p, double v) { return (v - p.e0) / p.e1; }

/// Affine model Tddot ~ d_t T + d_tdot Tdot + d_v v + bias around a point.
struct JetLinearization {
  double d_t = 0.0;
  double d_tdot = 0.0;
  double d_v = 0.0;
  double bias = 0.0;
};

inline JetLinearization jet_linearization(const JetParams& p, double t_c, double tdot_c,
                                          double v_c) {
  JetLinearization lin;
  lin.d_t = p.c[0] + 2.0 * p.c[2] * t_c + p.c[3] * tdot_c + p.d[1] * v_c;
  lin.d_tdot = p.c[1] + p.c[3] * t_c + 2.0 * p.c[4] * tdot_c + p.d[2] * v_c;
  lin.d_v = p.gain(t_c, tdot_c);
  lin.bias = p.drift(t_c, tdot_c) - lin.d_t * t_c - lin.d_tdot * tdot_c;
  return lin;
}

struct FeedbackLinearizationGains {
  double k_p = 4.0;
  double k_d = 4.0;
};

/// Cancels the drift and imposes Tddot = k_p (T_des - T) - k_d Tdot, then saturates.
inline double fl_thrust_controller(const JetParams& p, double t, double tdot, double t_des,
                                   const FeedbackLinearizationGains& gains) {
  const double g = p.gain(t, tdot);
  if (std::abs(g) < 1e-6) throw NumericalError("fl_thrust_controller: jet gain is singular");
  const double v = (-p.drift(t, tdot) + gains.k_p * (t_des - t) - gains.k_d * tdot) / g;
  return std::clamp(v, p.v_min, p.v_max);
}

}  // namespace jetmpc
