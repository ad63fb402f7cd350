#include "mandet/frames.hpp"

namespace mandet {

Mat3 vvlh_rotation(const Vec3& r, const Vec3& v) {
  const Vec3 h = r.cross(v);
  const double rn = r.norm();
  if (rn == 0.0 || h.norm() < 1e-6 * rn * v.norm() || h.norm() == 0.0) {
    throw DegenerateGeometryError("vvlh_rotation: r and v are parallel or zero");
  }
  const Vec3 z = -r / rn;
  const Vec3 y = -h.normalized();
  const Vec3 x = y.cross(z);
  Mat3 c;
  c.col(0) = x;
  c.col(1) = y;
  c.col(2) = z;
  return c;
}

}  // namespace mandet
