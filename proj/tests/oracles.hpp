// Test-side oracles, independent of the library implementation paths they
// check.
#ifndef MANDET_TESTS_ORACLES_HPP
#define MANDET_TESTS_ORACLES_HPP

#include <cmath>
#include <random>

#include "mandet/propagation.hpp"
#include "mandet/types.hpp"

namespace oracles {

using mandet::Epoch;
using mandet::ForceModelConfig;
using mandet::InertialState;
using mandet::ManeuverPolicy;
using mandet::Mat3;
using mandet::Mat6;
using mandet::Mat63;
using mandet::StepControl;
using mandet::Vec3;

// Keplerian extraction written Vallado-style with acos() and explicit
// quadrant fixes (the library uses atan2 projections); angles in degrees.
struct ExtractedElements {
  double a_km, e, inc_deg, raan_deg, argp_deg, mean_anom_deg;
};

inline ExtractedElements extract_elements(const Vec3& r, const Vec3& v, double mu) {
  const double pi = M_PI;
  const double rn = r.norm();
  const double vn = v.norm();
  const Vec3 h = r.cross(v);
  const Vec3 n(-h.y(), h.x(), 0.0);  // z_hat x h
  const Vec3 e_vec = ((vn * vn - mu / rn) * r - r.dot(v) * v) / mu;
  const double e = e_vec.norm();
  const double xi = vn * vn / 2.0 - mu / rn;
  const double a = -mu / (2.0 * xi);

  double inc = std::acos(std::clamp(h.z() / h.norm(), -1.0, 1.0));
  double raan = std::acos(std::clamp(n.x() / n.norm(), -1.0, 1.0));
  if (n.y() < 0.0) raan = 2.0 * pi - raan;
  double argp = std::acos(std::clamp(n.dot(e_vec) / (n.norm() * e), -1.0, 1.0));
  if (e_vec.z() < 0.0) argp = 2.0 * pi - argp;
  double nu = std::acos(std::clamp(e_vec.dot(r) / (e * rn), -1.0, 1.0));
  if (r.dot(v) < 0.0) nu = 2.0 * pi - nu;

  const double E = 2.0 * std::atan(std::sqrt((1.0 - e) / (1.0 + e)) * std::tan(nu / 2.0));
  double M = E - e * std::sin(E);
  M = std::fmod(M + 2.0 * pi, 2.0 * pi);

  const double deg = 180.0 / pi;
  return {a / 1000.0, e, inc * deg, std::fmod(raan * deg + 360.0, 360.0),
          std::fmod(argp * deg + 360.0, 360.0), M * deg};
}

// Central finite-difference STM: column j from propagating perturbed states.
inline Mat6 stm_finite_difference(const InertialState& s0, const ForceModelConfig& cfg,
                                  Epoch target, double eps_pos,
                                  const std::optional<ManeuverPolicy>& policy = std::nullopt,
                                  const StepControl& ctrl = {}) {
  const double eps_vel = eps_pos * 1e-3;
  Mat6 phi;
  for (int j = 0; j < 6; ++j) {
    const double eps = j < 3 ? eps_pos : eps_vel;
    InertialState plus = s0, minus = s0;
    if (j < 3) {
      plus.r[j] += eps;
      minus.r[j] -= eps;
    } else {
      plus.v[j - 3] += eps;
      minus.v[j - 3] -= eps;
    }
    const InertialState sp = propagate(plus, cfg, policy, target, ctrl);
    const InertialState sm = propagate(minus, cfg, policy, target, ctrl);
    phi.col(j).head<3>() = (sp.r - sm.r) / (2.0 * eps);
    phi.col(j).tail<3>() = (sp.v - sm.v) / (2.0 * eps);
  }
  return phi;
}

// Central finite-difference thrust sensitivity: burn active on the window
// only, thrust perturbed componentwise around u0.
inline Mat63 sensitivity_finite_difference(const InertialState& s0, const ForceModelConfig& cfg,
                                           Epoch burn_start, Epoch burn_end, Epoch target,
                                           const Vec3& u0 = Vec3::Zero(), double eps = 1e-6,
                                           const StepControl& ctrl = {}) {
  Mat63 s;
  for (int j = 0; j < 3; ++j) {
    Vec3 up = u0, um = u0;
    up[j] += eps;
    um[j] -= eps;
    const InertialState sp =
        propagate(s0, cfg, ManeuverPolicy{burn_start, burn_end, up}, target, ctrl);
    const InertialState sm =
        propagate(s0, cfg, ManeuverPolicy{burn_start, burn_end, um}, target, ctrl);
    s.col(j).head<3>() = (sp.r - sm.r) / (2.0 * eps);
    s.col(j).tail<3>() = (sp.v - sm.v) / (2.0 * eps);
  }
  return s;
}

// Textbook Clohessy-Wiltshire transition matrix in the Hill frame (x radial
// outward, y along-track, z cross-track), remapped to the library's axes
// (x in-track, y negative normal, z nadir).
inline Eigen::Matrix<double, 6, 6> cw_transition_paper_axes(double n, double t) {
  const double c = std::cos(n * t);
  const double s = std::sin(n * t);
  Eigen::Matrix<double, 6, 6> hill = Eigen::Matrix<double, 6, 6>::Zero();
  hill(0, 0) = 4.0 - 3.0 * c;
  hill(0, 3) = s / n;
  hill(0, 4) = 2.0 * (1.0 - c) / n;
  hill(1, 0) = 6.0 * (s - n * t);
  hill(1, 1) = 1.0;
  hill(1, 3) = 2.0 * (c - 1.0) / n;
  hill(1, 4) = (4.0 * s - 3.0 * n * t) / n;
  hill(2, 2) = c;
  hill(2, 5) = s / n;
  hill(3, 0) = 3.0 * n * s;
  hill(3, 3) = c;
  hill(3, 4) = 2.0 * s;
  hill(4, 0) = 6.0 * n * (c - 1.0);
  hill(4, 3) = -2.0 * s;
  hill(4, 4) = 4.0 * c - 3.0;
  hill(5, 2) = -n * s;
  hill(5, 5) = c;

  // paper = T * hill with x_p = y_H, y_p = -z_H, z_p = -x_H
  Eigen::Matrix<double, 6, 6> t_map = Eigen::Matrix<double, 6, 6>::Zero();
  t_map(0, 1) = 1.0;
  t_map(1, 2) = -1.0;
  t_map(2, 0) = -1.0;
  t_map(3, 4) = 1.0;
  t_map(4, 5) = -1.0;
  t_map(5, 3) = -1.0;
  return t_map * hill * t_map.transpose();
}

// Quasi-uniform minimization of the covariance-weighted distance over a
// ball of slack vectors: Fibonacci-sphere boundary layers plus interior
// shells. Independent check of the KKT route.
inline double relaxed_chi_sampling(const Vec3& diff, const Mat3& cov_sum, double d,
                                   int n_samples) {
  if (diff.norm() <= d) return 0.0;
  const Eigen::LLT<Mat3> llt(cov_sum);
  const auto chi2 = [&](const Vec3& b) {
    const Vec3 q = diff - b;
    return q.dot(llt.solve(q));
  };
  double best = chi2(Vec3::Zero());
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const int boundary = n_samples * 9 / 10;
  for (int i = 0; i < boundary; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / boundary;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    best = std::min(best, chi2(d * Vec3(rho * std::cos(phi), rho * std::sin(phi), z)));
  }
  const int inner = n_samples - boundary;
  for (int i = 0; i < inner; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / inner;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i * 1.7;
    const double scale = 0.35 + 0.6 * ((i * 2654435761u) % 1000) / 1000.0;
    best = std::min(best,
                    chi2(scale * d * Vec3(rho * std::cos(phi), rho * std::sin(phi), z)));
  }
  return std::sqrt(best);
}

inline Mat3 random_spd(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat3 a;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = g(rng);
  }
  return scale * scale * (a * a.transpose()) + 0.01 * scale * scale * Mat3::Identity();
}

}  // namespace oracles

#endif  // MANDET_TESTS_ORACLES_HPP
