#ifndef MANDET_FRAMES_HPP
#define MANDET_FRAMES_HPP

#include "mandet/types.hpp"

namespace mandet {

/// Rotation whose columns are the VVLH axes expressed in ECI:
/// Z along -r, Y along the negative orbit normal, X completing the triad
/// toward velocity. Maps VVLH vectors into ECI (C * u_vvlh).
Mat3 vvlh_rotation(const Vec3& r, const Vec3& v);

inline Mat3 vvlh_rotation(const InertialState& s) { return vvlh_rotation(s.r, s.v); }

}  // namespace mandet

#endif  // MANDET_FRAMES_HPP
