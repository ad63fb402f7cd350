#ifndef MANDET_OBSERVATION_HPP
#define MANDET_OBSERVATION_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mandet/propagation.hpp"
#include "mandet/types.hpp"

namespace mandet {

struct AnglePair {
  double alpha;  // right ascension [rad], atan2 range [-pi, pi)
  double delta;  // declination [rad], [-pi/2, pi/2]
};

struct AngularMeasurement {
  Epoch epoch;
  double alpha = 0.0;
  double delta = 0.0;
  double sigma = 0.0;  // 1-sigma noise [rad], shared by both angles
};

/// Time-ordered angular measurements from one sensor pass.
struct Tracklet {
  int id = 0;
  int observer_id = 0;
  std::vector<AngularMeasurement> measurements;

  Epoch first_epoch() const { return measurements.front().epoch; }
  Epoch last_epoch() const { return measurements.back().epoch; }
};

/// One observation pass: start offset from the scenario reference epoch
/// plus a duration. Visibility is a scenario input, not computed here.
struct TrackletWindow {
  double start_offset_s = 0.0;
  double duration_s = 0.0;
};

/// Geometric RA/DEC of a target position seen from an observer position.
AnglePair measure_simple(const Vec3& r_target, const Vec3& r_observer);

/// RA/DEC with first-order light-time and aberration corrections applied to
/// the separation vector (one Picard pass from the geometric range).
AnglePair measure_corrected(const InertialState& target, const InertialState& observer,
                            double light_speed = constants::speed_of_light);

/// Partials of (alpha; delta) with respect to target position and velocity.
/// The velocity block is the light-time scaling (rho/c) of the position block.
struct MeasurementPartials {
  Mat23 wrt_position;
  Mat23 wrt_velocity;
};

MeasurementPartials measurement_partials(const InertialState& target,
                                         const InertialState& observer,
                                         double light_speed = constants::speed_of_light);

/// Wraps an angle difference into [-pi, pi).
double wrap_angle(double x);

/// Propagating state provider anchored at one epoch, optionally carrying the
/// truth maneuver. Pure given its inputs; queries may be batched for speed.
class Ephemeris {
 public:
  Ephemeris(InertialState anchor, ForceModelConfig cfg, StepControl ctrl = {})
      : anchor_(anchor), cfg_(cfg), ctrl_(ctrl) {}
  Ephemeris(InertialState anchor, ForceModelConfig cfg, ManeuverPolicy policy,
            StepControl ctrl = {})
      : anchor_(anchor), cfg_(cfg), policy_(policy), ctrl_(ctrl) {}
  Ephemeris(InertialState anchor, ForceModelConfig cfg, ImpulsiveManeuver impulse,
            StepControl ctrl = {})
      : anchor_(anchor), cfg_(cfg), impulse_(impulse), ctrl_(ctrl) {}

  const InertialState& anchor() const { return anchor_; }
  const ForceModelConfig& force_model() const { return cfg_; }

  InertialState at(Epoch t) const;

  /// States at many epochs (must be sorted ascending); one integration sweep
  /// per direction from the anchor.
  std::vector<InertialState> at(std::span<const Epoch> epochs) const;

 private:
  InertialState anchor_;
  ForceModelConfig cfg_;
  std::optional<ManeuverPolicy> policy_;
  std::optional<ImpulsiveManeuver> impulse_;
  StepControl ctrl_;
};

/// Synthetic corrected-model measurements over the given windows with
/// independent zero-mean Gaussian noise on each angle. Each window draws
/// from its own seeded substream, so generation order cannot change results.
std::vector<Tracklet> simulate_tracklets(std::span<const TrackletWindow> windows,
                                         const Ephemeris& target, const Ephemeris& observer,
                                         double sigma_rad, double cadence_s,
                                         std::uint64_t seed, int observer_id = 0);

}  // namespace mandet

#endif  // MANDET_OBSERVATION_HPP
