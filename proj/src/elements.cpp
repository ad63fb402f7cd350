#include "mandet/elements.hpp"

#include <cmath>

namespace mandet {

namespace {

double wrap_deg(double x) {
  double w = std::fmod(x, 360.0);
  return w < 0.0 ? w + 360.0 : w;
}

}  // namespace

double solve_kepler(double mean_anom_rad, double e) {
  // Newton iteration; E0 = M is a safe start for e < 1.
  double E = e < 0.8 ? mean_anom_rad : M_PI;
  for (int i = 0; i < 60; ++i) {
    const double f = E - e * std::sin(E) - mean_anom_rad;
    const double fp = 1.0 - e * std::cos(E);
    const double dE = f / fp;
    E -= dE;
    if (std::abs(dE) < 1e-14) break;
  }
  return E;
}

InertialState elements_to_state(const OrbitalElements& el, double mu, Epoch epoch) {
  if (el.e < 0.0 || el.e >= 1.0) {
    throw InputError("elements_to_state: eccentricity must satisfy 0 <= e < 1");
  }
  if (el.a_km <= 0.0) {
    throw InputError("elements_to_state: semi-major axis must be positive");
  }
  const double a = el.a_km * 1000.0;
  const double e = el.e;
  const double inc = el.inc_deg * constants::deg;
  const double raan = el.raan_deg * constants::deg;
  const double argp = el.argp_deg * constants::deg;
  const double M = el.mean_anom_deg * constants::deg;

  const double E = solve_kepler(M, e);
  const double cosE = std::cos(E);
  const double sinE = std::sin(E);
  const double b_over_a = std::sqrt(1.0 - e * e);

  // Perifocal position/velocity.
  const Vec3 r_pf(a * (cosE - e), a * b_over_a * sinE, 0.0);
  const double n = std::sqrt(mu / (a * a * a));
  const Vec3 v_pf(-a * n * sinE / (1.0 - e * cosE),
                  a * n * b_over_a * cosE / (1.0 - e * cosE), 0.0);

  const Eigen::AngleAxisd rot_raan(raan, Vec3::UnitZ());
  const Eigen::AngleAxisd rot_inc(inc, Vec3::UnitX());
  const Eigen::AngleAxisd rot_argp(argp, Vec3::UnitZ());
  const Mat3 pf_to_eci = (rot_raan * rot_inc * rot_argp).toRotationMatrix();

  InertialState out;
  out.epoch = epoch;
  out.r = pf_to_eci * r_pf;
  out.v = pf_to_eci * v_pf;
  return out;
}

OrbitalElements state_to_elements(const InertialState& state, double mu) {
  const Vec3& r = state.r;
  const Vec3& v = state.v;
  const double rn = r.norm();
  const Vec3 h = r.cross(v);
  const double hn = h.norm();
  if (rn == 0.0 || hn == 0.0) {
    throw DegenerateGeometryError("state_to_elements: degenerate state");
  }

  const double energy = v.squaredNorm() / 2.0 - mu / rn;
  if (energy >= 0.0) {
    throw InputError("state_to_elements: orbit is not elliptic");
  }
  const double a = -mu / (2.0 * energy);

  const Vec3 e_vec = (v.cross(h) / mu) - r / rn;
  const double e = e_vec.norm();

  const double inc = std::acos(std::clamp(h.z() / hn, -1.0, 1.0));
  const Vec3 node = Vec3::UnitZ().cross(h);
  const double nn = node.norm();

  double raan = 0.0;
  if (nn > 1e-12 * hn) {
    raan = std::atan2(node.y(), node.x());
  }

  double argp = 0.0;
  if (e > 1e-12) {
    if (nn > 1e-12 * hn) {
      const Vec3 n_hat = node / nn;
      argp = std::atan2(e_vec.dot(h.cross(n_hat)) / hn, e_vec.dot(n_hat));
    } else {
      argp = std::atan2(e_vec.y(), e_vec.x());  // equatorial: measure from x axis
    }
  }

  // True anomaly from the eccentricity vector (or the node line when e ~ 0).
  double true_anom;
  if (e > 1e-12) {
    const Vec3 e_hat = e_vec / e;
    true_anom = std::atan2(r.dot(h.cross(e_hat)) / hn, r.dot(e_hat));
  } else if (nn > 1e-12 * hn) {
    const Vec3 n_hat = node / nn;
    true_anom = std::atan2(r.dot(h.cross(n_hat)) / hn, r.dot(n_hat));
  } else {
    true_anom = std::atan2(r.y(), r.x());
  }

  const double E = 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(true_anom / 2.0),
                                    std::sqrt(1.0 + e) * std::cos(true_anom / 2.0));
  const double M = E - e * std::sin(E);

  OrbitalElements el;
  el.a_km = a / 1000.0;
  el.e = e;
  el.inc_deg = wrap_deg(inc / constants::deg);
  el.raan_deg = wrap_deg(raan / constants::deg);
  el.argp_deg = wrap_deg(argp / constants::deg);
  el.mean_anom_deg = wrap_deg(M / constants::deg);
  return el;
}

}  // namespace mandet
