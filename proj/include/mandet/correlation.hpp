#ifndef MANDET_CORRELATION_HPP
#define MANDET_CORRELATION_HPP

#include <optional>
#include <span>
#include <vector>

#include "mandet/parallel.hpp"
#include "mandet/propagation.hpp"
#include "mandet/types.hpp"

namespace mandet {

struct PositionWithCovariance {
  Epoch epoch;
  Vec3 r = Vec3::Zero();   // [m]
  Mat3 cov = Mat3::Zero(); // [m^2], symmetric positive definite
};

/// chi = sqrt((r2-r1)^T (P1+P2)^-1 (r2-r1)). Epochs must match.
double mahalanobis(const PositionWithCovariance& a, const PositionWithCovariance& b);

/// Minimum Mahalanobis distance over position slacks inside a ball of the
/// given radius: 0 when the separation already fits in the ball, otherwise
/// the KKT solution (eigendecomposition + scalar root-solve for the
/// multiplier). ball_radius = 0 degenerates to the strict distance.
double mahalanobis_relaxed(const PositionWithCovariance& a, const PositionWithCovariance& b,
                           double ball_radius);

struct CorrelationGates {
  double chi_max = 3.38;                 // 99% gate for the 3-D distribution
  std::optional<double> ball_radius;     // [m]; engages the relaxed distance
};

struct CorrelationReport {
  std::vector<Epoch> epochs;
  std::vector<double> chi_strict;
  std::vector<double> chi_relaxed;  // empty unless the relaxed gate ran
  CorrelationGates gates;
  bool correlated_strict = false;
  bool correlated_relaxed = false;

  bool correlated() const { return correlated_strict || correlated_relaxed; }
};

/// Trajectory-with-covariance source: an anchor state whose 6x6 covariance is
/// mapped along the orbit as Phi P Phi^T. A diagonal floor (sigma per axis)
/// keeps the position block positive definite; an exact catalog orbit is
/// represented by a zero covariance plus the floor.
class OrbitWithCovariance {
 public:
  OrbitWithCovariance(InertialState anchor, Mat6 covariance, ForceModelConfig cfg,
                      double floor_sigma_m = 50.0, StepControl ctrl = {});

  std::vector<PositionWithCovariance> sample(std::span<const Epoch> epochs) const;

  const InertialState& anchor() const { return anchor_; }

 private:
  InertialState anchor_;
  Mat6 covariance_;
  ForceModelConfig cfg_;
  double floor_sigma_m_;
  StepControl ctrl_;
};

/// Per-epoch strict (and optionally relaxed) distances over the grid; the
/// verdict is an existence test against the chi gate. The epoch scan is
/// data-parallel.
CorrelationReport correlate_orbits(const OrbitWithCovariance& orbit1,
                                   const OrbitWithCovariance& orbit2,
                                   std::span<const Epoch> grid, const CorrelationGates& gates,
                                   ExecMode exec = ExecMode::Parallel);

/// Inclusive epoch grid [t0, t1] at the given step.
std::vector<Epoch> make_epoch_grid(Epoch t0, Epoch t1, double step_s);

}  // namespace mandet

#endif  // MANDET_CORRELATION_HPP
