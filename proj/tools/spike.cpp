// Scratch end-to-end probe; not part of the shipped toolset.
#include <chrono>
#include <cstdio>

#include "mandet/correlation.hpp"
#include "mandet/detection.hpp"
#include "mandet/elements.hpp"
#include "mandet/estimation.hpp"
#include "mandet/scenario.hpp"

using namespace mandet;

namespace {
double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

int main(int argc, char** argv) {
  const char* path = argc > 1 ? argv[1] : "scenarios/sentinel6a.scn";
  const int n_post = argc > 2 ? std::atoi(argv[2]) : 3;

  Scenario sc = load_scenario(path);
  std::printf("scenario %s: %zu windows, truth dV = %.4f m/s\n", sc.name.c_str(),
              sc.windows.size(), sc.thrust_truth ? sc.thrust_truth->delta_v() : 0.0);
  if (sc.thrust_truth) {
    std::printf("truth burn: [%.1f, %.1f] s\n", sc.thrust_truth->burn_start.sec,
                sc.thrust_truth->burn_end.sec);
  }

  double t0 = now_ms();
  const auto tracklets = simulate_scenario_tracklets(sc);
  std::printf("simulated %zu tracklets (%.0f ms)\n", tracklets.size(), now_ms() - t0);

  const Ephemeris observer = make_observer_ephemeris(sc);
  const InertialState catalog = pre_maneuver_state(sc);
  const auto split = split_tracklets(tracklets, catalog, observer, sc.force);
  std::printf("split: %zu pre / %zu post\n", split.pre.size(), split.post.size());

  // last pre epoch / first post epoch
  const Epoch t_last_pre = split.pre.back().last_epoch();
  const Epoch t_first_post = split.post.front().first_epoch();
  std::printf("t0 = %.1f, t1 = %.1f\n", t_last_pre.sec, t_first_post.sec);

  std::vector<Tracklet> chosen(split.post.begin(),
                               split.post.begin() + std::min<std::size_t>(n_post, split.post.size()));
  const StackedMeasurements stacked = stack_tracklets(chosen, observer);

  // BLS from the propagated catalog orbit
  t0 = now_ms();
  const InertialState pre_at_t0 = propagate(catalog, sc.force, std::nullopt, t_last_pre);
  const BlsResult bls = estimate_post_maneuver_orbit(pre_at_t0, t_first_post, stacked, sc.force);
  std::printf("BLS: converged=%d iters=%d wrms=%.3f (%.0f ms)\n", bls.converged,
              bls.iterations, bls.wrms, now_ms() - t0);
  if (!bls.converged) return 1;
  std::printf("BLS position sigma: %.1f %.1f %.1f m\n",
              std::sqrt(bls.covariance(0, 0)), std::sqrt(bls.covariance(1, 1)),
              std::sqrt(bls.covariance(2, 2)));

  // truth post state for comparison
  const Ephemeris truth = make_target_truth_ephemeris(sc);
  const InertialState truth_at_est = truth.at(bls.state.epoch);
  std::printf("BLS error vs truth: %.1f m, %.4f m/s\n", (bls.state.r - truth_at_est.r).norm(),
              (bls.state.v - truth_at_est.v).norm());

  // correlation scan over the gap
  t0 = now_ms();
  const OrbitWithCovariance pre_orbit(pre_at_t0, Mat6::Zero(), sc.force, 50.0);
  const OrbitWithCovariance post_orbit(bls.state, bls.covariance, sc.force, 0.0);
  const auto grid_epochs = make_epoch_grid(t_last_pre, t_first_post, 60.0);
  CorrelationGates gates;
  gates.ball_radius = 10e3;
  const CorrelationReport rep =
      correlate_orbits(pre_orbit, post_orbit, grid_epochs, gates, ExecMode::Parallel);
  double min_strict = 1e300, min_relaxed = 1e300;
  for (double c : rep.chi_strict) min_strict = std::min(min_strict, c);
  for (double c : rep.chi_relaxed) min_relaxed = std::min(min_relaxed, c);
  std::printf("correlation: min strict chi = %.3f, min relaxed chi = %.3f (%.0f ms)\n",
              min_strict, min_relaxed, now_ms() - t0);
  std::printf("strict pass: %d, relaxed pass: %d\n", rep.correlated_strict,
              rep.correlated_relaxed);

  // search window + detection
  const SearchWindow window = build_search_window(t_last_pre, t_first_post, rep, 3600.0);
  double span = 0.0;
  for (auto& iv : window.hint_intervals) span += iv.second - iv.first;
  std::printf("hint intervals: %zu, total span %.0f s\n", window.hint_intervals.size(), span);

  t0 = now_ms();
  DetectionGrid dgrid;
  const DetectionResult det = detect(pre_at_t0, stacked, window, dgrid, 1.2, sc.force,
                                     ExecMode::Parallel, &bls.state);
  std::printf("detect: %zu candidates (%.0f ms)\n", det.candidates.size(), now_ms() - t0);
  if (const ManeuverCandidate* sel = det.chosen()) {
    std::printf("selected: tb=%.1f tf=%.1f dV=%.4f J=%.3f mode=%d\n", sel->burn_start.sec,
                sel->burn_end.sec, sel->delta_v, sel->j, static_cast<int>(det.mode));
    if (sc.thrust_truth) {
      std::printf("errors: tb %+.1f s, tf %+.1f s, dV %+.3f%%\n",
                  sel->burn_start.sec - sc.thrust_truth->burn_start.sec,
                  sel->burn_end.sec - sc.thrust_truth->burn_end.sec,
                  100.0 * (sel->delta_v / sc.thrust_truth->delta_v() - 1.0));
    }
  } else {
    std::printf("no candidate accepted\n");
  }
  return 0;
}
