#ifndef MANDET_PROPAGATION_HPP
#define MANDET_PROPAGATION_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mandet/types.hpp"

namespace mandet {

/// Adaptive step control for the embedded Runge-Kutta pair. Integration
/// steps are clipped so they land exactly on thrust-window boundaries and
/// on every requested output epoch; the discontinuous right-hand side is
/// never evaluated across a window edge.
struct StepControl {
  double rel_tol = 1e-12;
  double abs_tol = 1e-9;     // [m] / [m/s] mixed-state absolute floor
  double initial_step = 10.0;  // [s]
  double max_step = 600.0;     // [s]
};

/// Interval over which the sensitivity forcing term [0; C(r,v)] is active,
/// with the same (begin, end] convention as a thrust window.
struct ThrustWindow {
  Epoch begin;
  Epoch end;
};

InertialState propagate(const InertialState& state, const ForceModelConfig& cfg,
                        const std::optional<ManeuverPolicy>& policy, Epoch target,
                        const StepControl& ctrl = {});

/// Visits every epoch in `epochs` exactly (epochs must be monotone and all on
/// the same side of state.epoch; backward propagation is supported).
void propagate_path(const InertialState& state, const ForceModelConfig& cfg,
                    const std::optional<ManeuverPolicy>& policy,
                    std::span<const Epoch> epochs,
                    const std::function<void(const InertialState&)>& visit,
                    const StepControl& ctrl = {});

/// Sudden velocity change at the state's epoch; position unchanged.
InertialState apply_impulse(const InertialState& state, const ImpulsiveManeuver& imp);

/// Propagates state, STM and thrust sensitivity from state.epoch. The STM
/// reference epoch is state.epoch. `s_window` limits where the sensitivity
/// forcing accumulates; when absent the forcing is active over the whole
/// span, which is what the window-differencing identity expects.
VariationalState propagate_variational(const InertialState& state,
                                       const ForceModelConfig& cfg, Epoch target,
                                       const std::optional<ManeuverPolicy>& policy = std::nullopt,
                                       const std::optional<ThrustWindow>& s_window = std::nullopt,
                                       const StepControl& ctrl = {});

void propagate_variational_path(const InertialState& state, const ForceModelConfig& cfg,
                                std::span<const Epoch> epochs,
                                const std::function<void(const VariationalState&)>& visit,
                                const std::optional<ManeuverPolicy>& policy = std::nullopt,
                                const std::optional<ThrustWindow>& s_window = std::nullopt,
                                const StepControl& ctrl = {});

/// Phi(t_k, t_f) from two STMs sharing the reference epoch.
Mat6 stm_between(const Mat6& phi_k_ref, const Mat6& phi_f_ref);

/// S(t_f, t_b) = S(t_f, t0) - Phi(t_f, t_b) S(t_b, t0).
Mat63 sensitivity_between(const Mat63& s_f_ref, const Mat6& phi_f_b, const Mat63& s_b_ref);

}  // namespace mandet

#endif  // MANDET_PROPAGATION_HPP
