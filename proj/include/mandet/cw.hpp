#ifndef MANDET_CW_HPP
#define MANDET_CW_HPP

#include <iosfwd>

#include "mandet/propagation.hpp"
#include "mandet/types.hpp"

namespace mandet {

/// Relative state about a circular chief, in the chief's VVLH axes
/// (x in-track, y negative orbit normal, z toward nadir).
struct RelativeState {
  Vec3 dr = Vec3::Zero();  // [m]
  Vec3 dv = Vec3::Zero();  // [m/s]
  double n = 0.0;          // chief mean motion [rad/s]
};

/// Numeric integration of the linearized relative motion with constant
/// thrust u in the chief frame. The normal channel is decoupled.
RelativeState cw_propagate(const RelativeState& rel, const Vec3& u, double dt,
                           const StepControl& ctrl = {});

struct NormalChannelState {
  double pos = 0.0;  // [m]
  double vel = 0.0;  // [m/s]
};

/// Free normal-channel motion: a harmonic oscillator at the orbital rate.
NormalChannelState cw_normal_free(double pos0, double vel0, double n, double dt);

/// Normal-channel motion under constant normal thrust; reduces to the free
/// solution at u = 0 and to the from-rest forced ellipse for zero initial
/// conditions.
NormalChannelState cw_normal_thrust(double pos0, double vel0, double u_normal, double n,
                                    double dt);

/// Phase-plane trace (t, pos, vel) of a thrust-then-coast policy, for
/// plotting the reachability picture. Columns: t_s, dy_m, dydot_mps.
void write_normal_phase_csv(std::ostream& os, double pos0, double vel0, double u_normal,
                            double burn_duration, double n, double t_end, double step);

}  // namespace mandet

#endif  // MANDET_CW_HPP
