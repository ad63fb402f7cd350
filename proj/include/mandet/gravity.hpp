#ifndef MANDET_GRAVITY_HPP
#define MANDET_GRAVITY_HPP

#include <optional>

#include "mandet/types.hpp"

namespace mandet {

/// Gravitational acceleration: point mass plus the J2 zonal term when
/// cfg.zonal_degree == 2. [m/s^2]
Vec3 gravity(const Vec3& r, const ForceModelConfig& cfg);

/// Analytic gradient d(gravity)/dr, the lower-left block of the
/// variational A matrix. Symmetric.
Mat3 gravity_gradient(const Vec3& r, const ForceModelConfig& cfg);

/// Total acceleration including the rotated VVLH thrust when the state's
/// epoch falls inside (burn_start, burn_end].
Vec3 acceleration(const InertialState& state, const ForceModelConfig& cfg,
                  const std::optional<ManeuverPolicy>& policy = std::nullopt);

}  // namespace mandet

#endif  // MANDET_GRAVITY_HPP
