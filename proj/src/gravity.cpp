#include "mandet/gravity.hpp"

#include <cmath>

#include "mandet/frames.hpp"

namespace mandet {

Vec3 gravity(const Vec3& r, const ForceModelConfig& cfg) {
  const double rn = r.norm();
  const double r3 = rn * rn * rn;
  Vec3 a = -cfg.mu * r / r3;
  if (cfg.zonal_degree >= 2) {
    // Standard J2 zonal acceleration in ECI.
    const double k = -1.5 * cfg.j2 * cfg.mu * cfg.earth_radius * cfg.earth_radius;
    const double r2 = rn * rn;
    const double r5 = r2 * r3;
    const double z2_r2 = r.z() * r.z() / r2;
    a.x() += k * r.x() / r5 * (1.0 - 5.0 * z2_r2);
    a.y() += k * r.y() / r5 * (1.0 - 5.0 * z2_r2);
    a.z() += k * r.z() / r5 * (3.0 - 5.0 * z2_r2);
  }
  return a;
}

Mat3 gravity_gradient(const Vec3& r, const ForceModelConfig& cfg) {
  const double rn = r.norm();
  const double r2 = rn * rn;
  const double r3 = r2 * rn;
  const double r5 = r2 * r3;
  Mat3 g = cfg.mu * (3.0 * r * r.transpose() / r5 - Mat3::Identity() / r3);
  if (cfg.zonal_degree >= 2) {
    const double k = -1.5 * cfg.j2 * cfg.mu * cfg.earth_radius * cfg.earth_radius;
    const double r7 = r5 * r2;
    const double r9 = r7 * r2;
    const double x = r.x(), y = r.y(), z = r.z();
    const double z2 = z * z;
    Mat3 gj;
    gj(0, 0) = 1.0 / r5 - 5.0 * (x * x + z2) / r7 + 35.0 * x * x * z2 / r9;
    gj(0, 1) = -5.0 * x * y / r7 + 35.0 * x * y * z2 / r9;
    gj(0, 2) = -15.0 * x * z / r7 + 35.0 * x * z * z2 / r9;
    gj(1, 0) = gj(0, 1);
    gj(1, 1) = 1.0 / r5 - 5.0 * (y * y + z2) / r7 + 35.0 * y * y * z2 / r9;
    gj(1, 2) = -15.0 * y * z / r7 + 35.0 * y * z * z2 / r9;
    gj(2, 0) = gj(0, 2);
    gj(2, 1) = gj(1, 2);
    gj(2, 2) = 3.0 / r5 - 30.0 * z2 / r7 + 35.0 * z2 * z2 / r9;
    g += k * gj;
  }
  return g;
}

Vec3 acceleration(const InertialState& state, const ForceModelConfig& cfg,
                  const std::optional<ManeuverPolicy>& policy) {
  Vec3 a = gravity(state.r, cfg);
  if (policy && policy->active_at(state.epoch)) {
    a += vvlh_rotation(state) * policy->u_vvlh;
  }
  return a;
}

}  // namespace mandet
