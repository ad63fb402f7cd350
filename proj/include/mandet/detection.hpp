#ifndef MANDET_DETECTION_HPP
#define MANDET_DETECTION_HPP

#include <optional>
#include <utility>
#include <vector>

#include "mandet/correlation.hpp"
#include "mandet/estimation.hpp"
#include "mandet/parallel.hpp"
#include "mandet/types.hpp"

namespace mandet {

/// Time span and midpoint hints for the candidate search. t0 is the last
/// pre-maneuver observation, t1 the earliest post-maneuver one; the hints
/// come from the correlation scan's sub-threshold epochs, padded by half the
/// maximum duration and merged into intervals.
struct SearchWindow {
  Epoch t0;
  Epoch t1;
  std::vector<std::pair<Epoch, Epoch>> hint_intervals;
  double max_duration = 3600.0;  // [s]
};

SearchWindow build_search_window(Epoch t0, Epoch t1, const CorrelationReport& report,
                                 double max_duration = 3600.0);

struct DetectionGrid {
  double midpoint_step = 60.0;  // [s]
  double duration_step = 60.0;  // [s], also the smallest duration tried
};

struct ManeuverCandidate {
  Epoch burn_start;
  Epoch burn_end;
  ThrustEstimate estimate;
  double delta_v = 0.0;  // (tf - tb) * |u_hat| [m/s]
  double j = std::numeric_limits<double>::infinity();  // +inf when the fit diverged
  bool accepted = false;

  Epoch midpoint() const { return Epoch{0.5 * (burn_start.sec + burn_end.sec)}; }
  double duration() const { return burn_end - burn_start; }
};

enum class DetectionMode { None, Impulsive, LongDuration };

struct DetectionResult {
  std::vector<ManeuverCandidate> candidates;  // sorted by (burn_start, burn_end)
  std::optional<std::size_t> selected;        // index of the chosen candidate
  DetectionMode mode = DetectionMode::None;
  double j_threshold = 1.2;

  const ManeuverCandidate* chosen() const {
    return selected ? &candidates[*selected] : nullptr;
  }
};

/// Long-duration detection: enumerates (burn_start, burn_end) pairs whose
/// midpoint lies in the hint region, fits the thrust for each, keeps fits
/// with J at or below the threshold and picks the minimum-total-impulse one.
/// Candidate fits are independent and run in parallel.
///
/// post_state, when given (the batch post-maneuver orbit solution), seeds
/// each fit with the impulse-equivalent thrust at the candidate midpoint;
/// without it fits start from zero thrust, which is only adequate for
/// small total impulses.
DetectionResult detect(const InertialState& pre_state, const StackedMeasurements& meas,
                       const SearchWindow& window, const DetectionGrid& grid,
                       double j_threshold, const ForceModelConfig& cfg,
                       ExecMode exec = ExecMode::Parallel,
                       const InertialState* post_state = nullptr,
                       const GaussNewtonOptions& gn = {}, const StepControl& ctrl = {});

/// Impulsive detection: 1-D scan of the maneuver epoch over the hint region
/// with a short fixed estimation window.
DetectionResult detect_impulsive(const InertialState& pre_state,
                                 const StackedMeasurements& meas, const SearchWindow& window,
                                 double epoch_step, double j_threshold,
                                 const ForceModelConfig& cfg,
                                 ExecMode exec = ExecMode::Parallel,
                                 const InertialState* post_state = nullptr,
                                 const GaussNewtonOptions& gn = {},
                                 const StepControl& ctrl = {});

/// Number of 8-connected accepted regions on the (midpoint, duration)
/// lattice; the multi-modality signature of poorly observable cases.
int count_accepted_regions(const DetectionResult& result, const DetectionGrid& grid);

}  // namespace mandet

#endif  // MANDET_DETECTION_HPP
