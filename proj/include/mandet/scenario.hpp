#ifndef MANDET_SCENARIO_HPP
#define MANDET_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mandet/correlation.hpp"
#include "mandet/detection.hpp"
#include "mandet/observation.hpp"
#include "mandet/types.hpp"

namespace mandet {

/// Error for malformed scenario files; message carries file:line context.
struct ScenarioError : InputError {
  using InputError::InputError;
};

/// Full problem definition: reference epoch, force model, the two orbits,
/// the truth maneuver, observation windows and noise. All epochs inside are
/// seconds from the reference epoch; UTC appears only in the file.
struct Scenario {
  std::string name;
  std::string reference_epoch_utc;
  ForceModelConfig force;
  OrbitalElements observer;
  OrbitalElements target;
  std::optional<ManeuverPolicy> thrust_truth;
  std::optional<ImpulsiveManeuver> impulse_truth;
  std::vector<TrackletWindow> windows;
  double sigma_rad = 5.0 * constants::arcsec;
  double cadence_s = 1.0;
  std::uint64_t seed = 1;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(std::istream& in, const std::string& filename);

/// Seconds between a UTC timestamp and the reference UTC timestamp, under a
/// fixed proleptic-Gregorian day count with no leap-second table. Accepts
/// "YYYY-MM-DD HH:MM:SS[.fff]" with ' ', 'T' or ", " separating date and time.
double utc_offset_seconds(const std::string& utc, const std::string& reference_utc);

/// Inverse of utc_offset_seconds for report output.
std::string utc_from_offset(double offset_s, const std::string& reference_utc);

// ---- scenario-derived building blocks ----

Ephemeris make_observer_ephemeris(const Scenario& sc, const StepControl& ctrl = {});
Ephemeris make_target_truth_ephemeris(const Scenario& sc, const StepControl& ctrl = {});

/// The catalog (pre-maneuver) orbit: target elements at the reference epoch,
/// treated as exact.
InertialState pre_maneuver_state(const Scenario& sc);

std::vector<Tracklet> simulate_scenario_tracklets(const Scenario& sc,
                                                  const StepControl& ctrl = {});

/// Splits tracklets into catalog-consistent ("pre") and inconsistent
/// ("post") sets by gating the WRMS of predicted-vs-observed angles against
/// the freely propagated catalog orbit.
struct TrackletSplit {
  std::vector<Tracklet> pre;
  std::vector<Tracklet> post;
};

TrackletSplit split_tracklets(const std::vector<Tracklet>& tracklets,
                              const InertialState& catalog_state, const Ephemeris& observer,
                              const ForceModelConfig& cfg, double wrms_gate = 5.0,
                              const StepControl& ctrl = {});

// ---- flat-file I/O (CSV with a header row; JSON summary) ----

void write_tracklets_csv(std::ostream& os, const std::vector<Tracklet>& tracklets);
std::vector<Tracklet> read_tracklets_csv(std::istream& in, const std::string& filename);

void write_truth_states_csv(std::ostream& os, const std::vector<InertialState>& states);

void write_correlation_csv(std::ostream& os, const CorrelationReport& report);

void write_candidates_csv(std::ostream& os, const DetectionResult& result);

/// Summary record for one detection run: mode, window, thrust, delta-v, J.
std::string detection_summary_json(const DetectionResult& result, const Scenario& sc,
                                   std::size_t post_tracklets_used);

/// Writes content to path via a temp file + rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace mandet

#endif  // MANDET_SCENARIO_HPP
