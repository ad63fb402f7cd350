#ifndef MANDET_ELEMENTS_HPP
#define MANDET_ELEMENTS_HPP

#include "mandet/types.hpp"

namespace mandet {

/// Solve Kepler's equation E - e sin(E) = M for elliptic orbits.
double solve_kepler(double mean_anom_rad, double e);

/// Keplerian -> Cartesian. Rejects e >= 1.
InertialState elements_to_state(const OrbitalElements& el, double mu, Epoch epoch);

/// Cartesian -> Keplerian (angles normalized to [0, 360) deg).
OrbitalElements state_to_elements(const InertialState& state, double mu);

}  // namespace mandet

#endif  // MANDET_ELEMENTS_HPP
