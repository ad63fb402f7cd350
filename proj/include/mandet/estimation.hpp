#ifndef MANDET_ESTIMATION_HPP
#define MANDET_ESTIMATION_HPP

#include <span>
#include <vector>

#include "mandet/observation.hpp"
#include "mandet/propagation.hpp"
#include "mandet/types.hpp"

namespace mandet {

/// All included measurements flattened into one weighted vector: 2n angles,
/// n epochs, a per-pair sigma and the observer state at each epoch. Immutable
/// shared input for concurrent estimator runs.
struct StackedMeasurements {
  std::vector<Epoch> epochs;                    // strictly increasing
  std::vector<double> angles;                   // 2n, (alpha, delta) pairs
  std::vector<double> sigmas;                   // n, [rad]
  std::vector<InertialState> observer_states;   // n

  std::size_t pairs() const { return epochs.size(); }
  Epoch first_epoch() const { return epochs.front(); }
};

/// Flattens tracklets (already time-ordered) against an observer ephemeris.
/// sigma_override > 0 replaces the recorded per-measurement sigma in the
/// weights; use it to weight noiseless synthetic data.
StackedMeasurements stack_tracklets(std::span<const Tracklet> tracklets,
                                    const Ephemeris& observer, double sigma_override = 0.0);

/// J = sqrt( (1/2n) * sum((residual_i / sigma_i)^2) ) over 2n scalar angles.
double performance_index(std::span<const double> residuals, std::span<const double> sigmas);

struct GaussNewtonOptions {
  double step_tol = 1e-6;      // relative |du| stop
  double wrms_tol = 1e-4;      // relative J-change stop
  int max_iterations = 25;
  int max_halvings = 6;        // line-search fallback when J increases
};

struct ThrustEstimate {
  Vec3 u_vvlh = Vec3::Zero();  // [m/s^2]
  double wrms = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  Mat3 covariance = Mat3::Zero();
  std::vector<double> wrms_history;  // J at each accepted iterate
};

/// Fits the constant VVLH thrust over a fixed window by iterating the
/// weighted normal-equation update; the measurement Jacobian chains the
/// angular partials through the STM and the window thrust sensitivity.
/// The pre-maneuver state at t0 is treated as exact.
ThrustEstimate estimate_thrust(const InertialState& pre_state, Epoch burn_start,
                               Epoch burn_end, const StackedMeasurements& meas,
                               const ForceModelConfig& cfg, const Vec3& u0 = Vec3::Zero(),
                               const GaussNewtonOptions& opts = {},
                               const StepControl& ctrl = {});

struct BlsOptions {
  double wrms_rel_tol = 1e-3;
  int max_iterations = 40;
  int max_divergent = 3;       // consecutive WRMS increases before giving up
  int max_halvings = 8;
};

struct BlsResult {
  InertialState state;         // at the epoch of the first included measurement
  Mat6 covariance = Mat6::Zero();
  double wrms = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Batch differential correction of the 6-state at the first measurement
/// epoch. The initial guess is propagated to that epoch if needed.
BlsResult bls_orbit_determination(const StackedMeasurements& meas, const InertialState& guess,
                                  const ForceModelConfig& cfg, const BlsOptions& opts = {},
                                  const StepControl& ctrl = {});

/// Post-maneuver orbit from post-maneuver tracklets when no catalog-quality
/// guess exists: seeds the batch fit with the freely propagated pre-maneuver
/// orbit and, when that diverges, with a deterministic ladder of in-track
/// impulse hypotheses applied across the observation gap. Returns the first
/// seed whose post-fit WRMS clears the gate, else the best attempt.
BlsResult estimate_post_maneuver_orbit(const InertialState& pre_state, Epoch gap_end,
                                       const StackedMeasurements& meas,
                                       const ForceModelConfig& cfg,
                                       double accept_wrms = 3.0, const BlsOptions& opts = {},
                                       const StepControl& ctrl = {});

struct ImpulsiveEstimate {
  Vec3 dv_eci = Vec3::Zero();  // [m/s]
  double delta_v = 0.0;        // |dv| [m/s]
  double wrms = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Sudden-velocity-change fit: the thrust estimator run over a short fixed
/// window centered on t_m, reported as dv = w * C * u_hat.
ImpulsiveEstimate impulsive_estimate(const InertialState& pre_state, Epoch t_m,
                                     const StackedMeasurements& meas,
                                     const ForceModelConfig& cfg, double window_s = 1.0,
                                     const GaussNewtonOptions& opts = {},
                                     const StepControl& ctrl = {});

}  // namespace mandet

#endif  // MANDET_ESTIMATION_HPP
