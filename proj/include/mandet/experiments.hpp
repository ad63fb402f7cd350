#ifndef MANDET_EXPERIMENTS_HPP
#define MANDET_EXPERIMENTS_HPP

#include <iosfwd>
#include <vector>

#include "mandet/parallel.hpp"
#include "mandet/propagation.hpp"
#include "mandet/types.hpp"

namespace mandet {

/// Long-burn vs midpoint-impulse comparison on a circular orbit: for each
/// duration, the time-average 3-D separation between the thrusting
/// trajectory and its impulsive twin over the horizon.
struct DivergenceConfig {
  Vec3 direction = Vec3(1.0, 0.0, 0.0);  // unit VVLH thrust direction
  double u_mag = 1e-3;                   // [m/s^2]
  std::vector<double> durations = {300.0, 600.0, 1200.0, 1800.0, 2400.0};
  double horizon_s = 86400.0;
  double cadence_s = 60.0;
  double orbit_height_m = 500e3;
  ForceModelConfig force{};              // two-body by default
  StepControl step{};
};

struct DivergenceRow {
  double duration_s = 0.0;
  double mean_diff_m = 0.0;
};

std::vector<DivergenceRow> divergence_study(const DivergenceConfig& cfg,
                                            ExecMode exec = ExecMode::Parallel);

void write_divergence_csv(std::ostream& os, const std::vector<DivergenceRow>& rows);

/// Residual-RMS landscape over (burn start, burn end) guesses when fitting
/// the thrust against sequential position data of the post-maneuver orbit.
struct ObservabilityConfig {
  Vec3 direction = Vec3(1.0, 0.0, 0.0);
  double u_mag = 5e-3;                  // [m/s^2]
  double burn_start_s = 43200.0;        // truth window
  double burn_duration_s = 1200.0;
  double meas_start_s = 86400.0;        // virtual position span
  double meas_end_s = 172800.0;
  double cadence_s = 60.0;
  double grid_halfspan_s = 6000.0;      // each axis spans truth +- halfspan
  double grid_step_s = 120.0;
  double orbit_height_m = 500e3;
  ForceModelConfig force{};             // central force by default
  int max_iterations = 12;
  StepControl step{};
};

struct ObservabilityGrid {
  std::vector<double> tb_axis;  // burn-start guesses [s]
  std::vector<double> tf_axis;  // burn-end guesses [s]
  Eigen::MatrixXd rms;          // [m]; NaN where tb >= tf or out of range
  double truth_tb = 0.0;
  double truth_tf = 0.0;

  bool valid(Eigen::Index i, Eigen::Index j) const { return std::isfinite(rms(i, j)); }
};

ObservabilityGrid observability_map(const ObservabilityConfig& cfg,
                                    ExecMode exec = ExecMode::Parallel);

void write_observability_csv(std::ostream& os, const ObservabilityGrid& grid);

}  // namespace mandet

#endif  // MANDET_EXPERIMENTS_HPP
