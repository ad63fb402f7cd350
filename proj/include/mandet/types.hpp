#ifndef MANDET_TYPES_HPP
#define MANDET_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>

namespace mandet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

namespace constants {
inline constexpr double mu_earth = 3.986004418e14;    // [m^3/s^2]
inline constexpr double earth_radius = 6378137.0;     // equatorial [m]
inline constexpr double j2_earth = 1.08262668e-3;
inline constexpr double speed_of_light = 3.0e8;       // [m/s]
inline constexpr double arcsec = M_PI / (180.0 * 3600.0);
inline constexpr double deg = M_PI / 180.0;
}  // namespace constants

/// Continuous time in seconds relative to a scenario reference instant.
/// UTC calendar handling lives at the I/O boundary only.
struct Epoch {
  double sec = 0.0;

  friend auto operator<=>(const Epoch&, const Epoch&) = default;
  friend Epoch operator+(Epoch e, double dt) { return {e.sec + dt}; }
  friend Epoch operator-(Epoch e, double dt) { return {e.sec - dt}; }
  friend double operator-(Epoch a, Epoch b) { return a.sec - b.sec; }
};

/// Epoch-stamped ECI position/velocity, SI units.
struct InertialState {
  Epoch epoch;
  Vec3 r = Vec3::Zero();  // [m]
  Vec3 v = Vec3::Zero();  // [m/s]
};

/// Keplerian elements in the I/O convention (km and degrees).
struct OrbitalElements {
  double a_km = 0.0;
  double e = 0.0;
  double inc_deg = 0.0;
  double raan_deg = 0.0;
  double argp_deg = 0.0;
  double mean_anom_deg = 0.0;
};

/// Constant VVLH thrust over (burn_start, burn_end].
struct ManeuverPolicy {
  Epoch burn_start;
  Epoch burn_end;
  Vec3 u_vvlh = Vec3::Zero();  // [m/s^2] in VVLH axes

  double duration() const { return burn_end - burn_start; }
  double delta_v() const { return duration() * u_vvlh.norm(); }
  bool active_at(Epoch t) const { return burn_start < t && t <= burn_end; }
};

struct ImpulsiveManeuver {
  Epoch epoch;
  Vec3 dv_eci = Vec3::Zero();  // [m/s]
};

/// Point-mass gravity with an optional J2 zonal term. This deliberately
/// replaces higher-fidelity force stacks: truth generation and estimation
/// run under the same model, which is what the detection math needs.
struct ForceModelConfig {
  double mu = constants::mu_earth;
  int zonal_degree = 0;  // 0 = two-body, 2 = include J2
  double j2 = constants::j2_earth;
  double earth_radius = constants::earth_radius;
};

/// State plus state-transition matrix and constant-thrust sensitivity,
/// both relative to the propagation start epoch.
struct VariationalState {
  InertialState state;
  Mat6 stm = Mat6::Identity();                 // Phi(t, t0)
  Mat63 sensitivity = Mat63::Zero();           // S(t, t0), d(state)/du
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGeometryError : Error {
  using Error::Error;
};

struct IntegrationError : Error {
  using Error::Error;
};

struct InputError : Error {
  using Error::Error;
};

}  // namespace mandet

#endif  // MANDET_TYPES_HPP
