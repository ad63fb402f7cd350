// mandet: maneuver-detection toolkit CLI.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mandet/correlation.hpp"
#include "mandet/cw.hpp"
#include "mandet/detection.hpp"
#include "mandet/elements.hpp"
#include "mandet/estimation.hpp"
#include "mandet/experiments.hpp"
#include "mandet/scenario.hpp"

namespace {

using namespace mandet;

constexpr int kExitOk = 0;
constexpr int kExitNoCorrelation = 2;
constexpr int kExitDetectionFailed = 3;
constexpr int kExitInputError = 4;

Vec3 direction_from_name(const std::string& name) {
  if (name == "intrack") return Vec3(1.0, 0.0, 0.0);
  if (name == "normal") return Vec3(0.0, 1.0, 0.0);
  if (name == "radial") return Vec3(0.0, 0.0, 1.0);
  throw InputError("unknown thrust direction '" + name + "'");
}

struct PipelineInputs {
  Scenario scenario;
  std::vector<Tracklet> tracklets;
  TrackletSplit split;
  InertialState pre_at_t0;  // catalog orbit at the last pre-maneuver epoch
  Epoch t0, t1;
};

PipelineInputs load_pipeline(const std::string& scenario_path, const std::string& tracklet_path,
                             double split_gate) {
  PipelineInputs in;
  in.scenario = load_scenario(scenario_path);
  std::ifstream tf(tracklet_path);
  if (!tf) throw InputError("cannot open tracklet file '" + tracklet_path + "'");
  in.tracklets = read_tracklets_csv(tf, tracklet_path);

  const Ephemeris observer = make_observer_ephemeris(in.scenario);
  const InertialState catalog = pre_maneuver_state(in.scenario);
  in.split = split_tracklets(in.tracklets, catalog, observer, in.scenario.force, split_gate);
  if (in.split.pre.empty()) {
    throw InputError("no tracklet is consistent with the catalog orbit; check the scenario");
  }
  in.t0 = in.split.pre.back().last_epoch();
  in.pre_at_t0 = propagate(catalog, in.scenario.force, std::nullopt, in.t0);
  if (!in.split.post.empty()) in.t1 = in.split.post.front().first_epoch();
  return in;
}

int run_simulate(const std::string& scenario_path, const std::string& out_tracklets,
                 const std::string& out_truth, double truth_cadence) {
  const Scenario sc = load_scenario(scenario_path);
  const auto tracklets = simulate_scenario_tracklets(sc);

  std::ostringstream tr;
  write_tracklets_csv(tr, tracklets);
  write_file_atomic(out_tracklets, tr.str());

  if (!out_truth.empty()) {
    const Ephemeris truth = make_target_truth_ephemeris(sc);
    const double span_end = sc.windows.back().start_offset_s + sc.windows.back().duration_s;
    std::vector<Epoch> grid;
    for (double t = 0.0; t <= span_end + 1e-9; t += truth_cadence) grid.push_back(Epoch{t});
    std::ostringstream ts;
    write_truth_states_csv(ts, truth.at(grid));
    write_file_atomic(out_truth, ts.str());
  }
  std::printf("wrote %zu tracklets from scenario '%s'\n", tracklets.size(), sc.name.c_str());
  return kExitOk;
}

struct CorrelationStage {
  BlsResult bls;
  CorrelationReport report;
};

CorrelationStage run_correlation_stage(const PipelineInputs& in, std::size_t n_post,
                                       double chi_max, double ball_radius_m,
                                       double cov_floor_m, double grid_step,
                                       ExecMode exec) {
  if (in.split.post.size() < 2) {
    throw InputError("need at least 2 post-maneuver tracklets for orbit estimation");
  }
  const std::size_t used = std::min(n_post, in.split.post.size());
  const std::vector<Tracklet> chosen(in.split.post.begin(), in.split.post.begin() + used);
  const Ephemeris observer = make_observer_ephemeris(in.scenario);
  const StackedMeasurements stacked = stack_tracklets(chosen, observer);

  CorrelationStage stage;
  stage.bls = estimate_post_maneuver_orbit(in.pre_at_t0, in.t1, stacked, in.scenario.force);
  if (!stage.bls.converged) return stage;  // caller maps to no-verdict

  const OrbitWithCovariance pre_orbit(in.pre_at_t0, Mat6::Zero(), in.scenario.force,
                                      cov_floor_m);
  const OrbitWithCovariance post_orbit(stage.bls.state, stage.bls.covariance,
                                       in.scenario.force, 0.0);
  CorrelationGates gates;
  gates.chi_max = chi_max;
  if (ball_radius_m > 0.0) gates.ball_radius = ball_radius_m;
  const auto grid = make_epoch_grid(in.t0, in.t1, grid_step);
  stage.report = correlate_orbits(pre_orbit, post_orbit, grid, gates, exec);
  return stage;
}

int run_correlate(const std::string& scenario_path, const std::string& tracklet_path,
                  std::size_t n_post, double chi_max, double ball_radius_km,
                  double cov_floor_m, double grid_step, double split_gate,
                  const std::string& out_csv, bool serial) {
  const PipelineInputs in = load_pipeline(scenario_path, tracklet_path, split_gate);
  if (in.split.post.empty()) {
    std::printf("verdict: all %zu tracklets correlate with the catalog orbit (no gap)\n",
                in.tracklets.size());
    return kExitOk;
  }
  const ExecMode exec = serial ? ExecMode::Serial : ExecMode::Parallel;
  const CorrelationStage stage = run_correlation_stage(
      in, n_post, chi_max, ball_radius_km * 1000.0, cov_floor_m, grid_step, exec);
  if (!stage.bls.converged) {
    std::printf("verdict: none (post-maneuver orbit fit diverged)\n");
    return kExitNoCorrelation;
  }

  std::ostringstream os;
  write_correlation_csv(os, stage.report);
  write_file_atomic(out_csv, os.str());

  const auto& rep = stage.report;
  const double min_strict = *std::min_element(rep.chi_strict.begin(), rep.chi_strict.end());
  std::printf("strict gate:  min chi = %.3f -> %s\n", min_strict,
              rep.correlated_strict ? "correlated" : "uncorrelated");
  if (!rep.chi_relaxed.empty()) {
    const double min_rel = *std::min_element(rep.chi_relaxed.begin(), rep.chi_relaxed.end());
    std::printf("relaxed gate: min chi = %.3f -> %s\n", min_rel,
                rep.correlated_relaxed ? "correlated" : "uncorrelated");
  }
  return rep.correlated() ? kExitOk : kExitNoCorrelation;
}

int run_detect(const std::string& scenario_path, const std::string& tracklet_path,
               std::size_t n_post, const std::string& mode, double j_threshold,
               double midpoint_step, double duration_step, double max_duration,
               double epoch_step, double chi_max, double ball_radius_km, double cov_floor_m,
               double corr_grid_step, double split_gate, const std::string& out_summary,
               const std::string& out_candidates, bool serial) {
  const PipelineInputs in = load_pipeline(scenario_path, tracklet_path, split_gate);
  const ExecMode exec = serial ? ExecMode::Serial : ExecMode::Parallel;

  if (in.split.post.empty()) {
    DetectionResult empty;
    empty.j_threshold = j_threshold;
    write_file_atomic(out_summary, detection_summary_json(empty, in.scenario, 0));
    std::printf("no maneuver: every tracklet correlates with the catalog orbit\n");
    return kExitOk;
  }

  const CorrelationStage stage = run_correlation_stage(
      in, n_post, chi_max, ball_radius_km * 1000.0, cov_floor_m, corr_grid_step, exec);
  if (!stage.bls.converged) {
    std::printf("no verdict: post-maneuver orbit fit diverged\n");
    return kExitNoCorrelation;
  }
  if (!stage.report.correlated()) {
    std::printf("no correlation: post-maneuver orbit cannot be matched to the catalog orbit\n");
    return kExitNoCorrelation;
  }

  const std::size_t used = std::min(n_post, in.split.post.size());
  const std::vector<Tracklet> chosen(in.split.post.begin(), in.split.post.begin() + used);
  const Ephemeris observer = make_observer_ephemeris(in.scenario);
  const StackedMeasurements stacked = stack_tracklets(chosen, observer);
  const SearchWindow window = build_search_window(in.t0, in.t1, stage.report, max_duration);

  DetectionGrid grid;
  grid.midpoint_step = midpoint_step;
  grid.duration_step = duration_step;

  DetectionResult result;
  if (mode == "impulsive") {
    result = detect_impulsive(in.pre_at_t0, stacked, window, epoch_step, j_threshold,
                              in.scenario.force, exec, &stage.bls.state);
  } else if (mode == "long") {
    result = detect(in.pre_at_t0, stacked, window, grid, j_threshold, in.scenario.force, exec,
                    &stage.bls.state);
  } else {  // auto: impulsive first, fall back to the long-duration model
    result = detect_impulsive(in.pre_at_t0, stacked, window, epoch_step, j_threshold,
                              in.scenario.force, exec, &stage.bls.state);
    if (!result.selected) {
      result = detect(in.pre_at_t0, stacked, window, grid, j_threshold, in.scenario.force,
                      exec, &stage.bls.state);
    }
  }

  std::ostringstream cs;
  write_candidates_csv(cs, result);
  write_file_atomic(out_candidates, cs.str());
  write_file_atomic(out_summary, detection_summary_json(result, in.scenario, used));

  if (const ManeuverCandidate* sel = result.chosen()) {
    std::printf("detected: dV = %.4f m/s over [%s, %s] UTC, J = %.3f\n", sel->delta_v,
                utc_from_offset(sel->burn_start.sec, in.scenario.reference_epoch_utc).c_str(),
                utc_from_offset(sel->burn_end.sec, in.scenario.reference_epoch_utc).c_str(),
                sel->j);
    return kExitOk;
  }
  std::printf("detection failed: no candidate below the J threshold\n");
  return kExitDetectionFailed;
}

int run_divergence(const std::string& direction, double u_mag, std::vector<double> durations,
                   double horizon, double cadence, double height_km, const std::string& out,
                   bool serial) {
  DivergenceConfig cfg;
  cfg.direction = direction_from_name(direction);
  cfg.u_mag = u_mag;
  if (!durations.empty()) cfg.durations = std::move(durations);
  cfg.horizon_s = horizon;
  cfg.cadence_s = cadence;
  cfg.orbit_height_m = height_km * 1000.0;
  const auto rows = divergence_study(cfg, serial ? ExecMode::Serial : ExecMode::Parallel);
  std::ostringstream os;
  write_divergence_csv(os, rows);
  write_file_atomic(out, os.str());
  for (const auto& r : rows) {
    std::printf("duration %6.0f s: mean 3-D separation %.1f m\n", r.duration_s, r.mean_diff_m);
  }
  return kExitOk;
}

int run_observability(const std::string& direction, double u_mag, double burn_start,
                      double burn_duration, double meas_start, double meas_end, double cadence,
                      double halfspan, double grid_step, double height_km,
                      const std::string& out, bool serial) {
  ObservabilityConfig cfg;
  cfg.direction = direction_from_name(direction);
  cfg.u_mag = u_mag;
  cfg.burn_start_s = burn_start;
  cfg.burn_duration_s = burn_duration;
  cfg.meas_start_s = meas_start;
  cfg.meas_end_s = meas_end;
  cfg.cadence_s = cadence;
  cfg.grid_halfspan_s = halfspan;
  cfg.grid_step_s = grid_step;
  cfg.orbit_height_m = height_km * 1000.0;
  const auto grid = observability_map(cfg, serial ? ExecMode::Serial : ExecMode::Parallel);
  std::ostringstream os;
  write_observability_csv(os, grid);
  write_file_atomic(out, os.str());

  double best = std::numeric_limits<double>::infinity();
  double best_tb = 0.0, best_tf = 0.0;
  for (Eigen::Index i = 0; i < grid.rms.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.rms.cols(); ++j) {
      if (grid.valid(i, j) && grid.rms(i, j) < best) {
        best = grid.rms(i, j);
        best_tb = grid.tb_axis[i];
        best_tf = grid.tf_axis[j];
      }
    }
  }
  std::printf("grid %zux%zu; best RMS %.3g m at tb=%.0f s, tf=%.0f s (truth %.0f, %.0f)\n",
              grid.tb_axis.size(), grid.tf_axis.size(), best, best_tb, best_tf, grid.truth_tb,
              grid.truth_tf);
  return kExitOk;
}

int run_cw_phase(double pos0, double vel0, double u_normal, double burn, double n,
                 double t_end, double step, const std::string& out) {
  std::ostringstream os;
  write_normal_phase_csv(os, pos0, vel0, u_normal, burn, n, t_end, step);
  write_file_atomic(out, os.str());
  std::printf("wrote phase-plane trace to %s\n", out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mandet: long-duration maneuver detection from space-based angular tracklets"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Generate tracklets and truth states from a scenario");
  std::string sim_scenario, sim_out_trk, sim_out_truth;
  double sim_truth_cadence = 60.0;
  sim->add_option("--scenario", sim_scenario, "Scenario file path")->required();
  sim->add_option("--out-tracklets", sim_out_trk, "Output tracklet CSV path")->required();
  sim->add_option("--out-truth", sim_out_truth, "Output truth-state CSV path (optional)");
  sim->add_option("--truth-cadence", sim_truth_cadence, "Truth state sampling cadence [s]");

  // ---- correlate ----
  auto* cor = app.add_subcommand("correlate", "Orbit-to-orbit correlation across the gap");
  std::string cor_scenario, cor_trk, cor_out = "correlation.csv";
  std::size_t cor_post = 3;
  double cor_chi = 3.38, cor_ball_km = 10.0, cor_floor = 50.0, cor_step = 60.0, cor_gate = 5.0;
  bool cor_serial = false;
  cor->add_option("--scenario", cor_scenario, "Scenario file path")->required();
  cor->add_option("--tracklets", cor_trk, "Tracklet CSV path")->required();
  cor->add_option("--post-tracklets", cor_post, "Post-maneuver tracklets used for the orbit fit");
  cor->add_option("--chi-max", cor_chi, "Mahalanobis gate (dimensionless)");
  cor->add_option("--ball-radius-km", cor_ball_km, "Relaxed-gate slack ball radius [km]; 0 disables");
  cor->add_option("--cov-floor-m", cor_floor, "Catalog-orbit covariance floor, 1-sigma per axis [m]");
  cor->add_option("--grid-step", cor_step, "Correlation scan step [s]");
  cor->add_option("--split-gate", cor_gate, "Catalog-consistency WRMS gate for tracklet splitting");
  cor->add_option("--out", cor_out, "Output correlation CSV path");
  cor->add_flag("--serial", cor_serial, "Run the epoch scan on one thread");

  // ---- detect ----
  auto* det = app.add_subcommand("detect", "End-to-end maneuver detection");
  std::string det_scenario, det_trk, det_mode = "auto";
  std::string det_summary = "summary.json", det_cand = "candidates.csv";
  std::size_t det_post = 3;
  double det_j = 1.2, det_mstep = 60.0, det_dstep = 60.0, det_maxdur = 3600.0;
  double det_estep = 60.0, det_chi = 3.38, det_ball_km = 10.0, det_floor = 50.0;
  double det_cstep = 60.0, det_gate = 5.0;
  bool det_serial = false;
  det->add_option("--scenario", det_scenario, "Scenario file path")->required();
  det->add_option("--tracklets", det_trk, "Tracklet CSV path")->required();
  det->add_option("--post-tracklets", det_post, "Post-maneuver tracklets used");
  det->add_option("--mode", det_mode, "Maneuver model: auto | impulsive | long")
      ->check(CLI::IsMember({"auto", "impulsive", "long"}));
  det->add_option("--j-threshold", det_j, "WRMS acceptance threshold (dimensionless)");
  det->add_option("--midpoint-step", det_mstep, "Candidate midpoint grid step [s]");
  det->add_option("--duration-step", det_dstep, "Candidate duration grid step [s]");
  det->add_option("--max-duration", det_maxdur, "Largest candidate duration [s]");
  det->add_option("--epoch-step", det_estep, "Impulse epoch grid step [s]");
  det->add_option("--chi-max", det_chi, "Mahalanobis gate (dimensionless)");
  det->add_option("--ball-radius-km", det_ball_km, "Relaxed-gate slack ball radius [km]; 0 disables");
  det->add_option("--cov-floor-m", det_floor, "Catalog-orbit covariance floor, 1-sigma per axis [m]");
  det->add_option("--corr-grid-step", det_cstep, "Correlation scan step [s]");
  det->add_option("--split-gate", det_gate, "Catalog-consistency WRMS gate for tracklet splitting");
  det->add_option("--out-summary", det_summary, "Output summary JSON path");
  det->add_option("--out-candidates", det_cand, "Output candidate grid CSV path");
  det->add_flag("--serial", det_serial, "Evaluate candidates on one thread");

  // ---- divergence ----
  auto* div = app.add_subcommand("divergence", "Long-burn vs midpoint-impulse separation study");
  std::string div_dir = "intrack", div_out = "divergence.csv";
  double div_u = 1e-3, div_horizon = 86400.0, div_cadence = 60.0, div_height = 500.0;
  std::vector<double> div_durs;
  bool div_serial = false;
  div->add_option("--direction", div_dir, "Thrust direction: intrack | radial | normal")
      ->check(CLI::IsMember({"intrack", "radial", "normal"}));
  div->add_option("--u-mag", div_u, "Thrust acceleration magnitude [m/s^2]");
  div->add_option("--durations", div_durs, "Burn durations [s] (default 300 600 1200 1800 2400)");
  div->add_option("--horizon", div_horizon, "Comparison horizon [s]");
  div->add_option("--cadence", div_cadence, "Sampling cadence [s]");
  div->add_option("--height-km", div_height, "Circular orbit height [km]");
  div->add_option("--out", div_out, "Output CSV path");
  div->add_flag("--serial", div_serial, "Run durations on one thread");

  // ---- observability ----
  auto* obs = app.add_subcommand("observability",
                                 "Residual-RMS map over burn start/end guesses");
  std::string obs_dir = "intrack", obs_out = "observability.csv";
  double obs_u = 5e-3, obs_tb = 43200.0, obs_dur = 1200.0;
  double obs_ms = 86400.0, obs_me = 172800.0, obs_cad = 60.0;
  double obs_half = 6000.0, obs_step = 120.0, obs_height = 500.0;
  bool obs_serial = false;
  obs->add_option("--direction", obs_dir, "Thrust direction: intrack | radial | normal")
      ->check(CLI::IsMember({"intrack", "radial", "normal"}));
  obs->add_option("--u-mag", obs_u, "Thrust acceleration magnitude [m/s^2]");
  obs->add_option("--burn-start", obs_tb, "True burn start offset [s]");
  obs->add_option("--burn-duration", obs_dur, "True burn duration [s]");
  obs->add_option("--meas-start", obs_ms, "Virtual position span start [s]");
  obs->add_option("--meas-end", obs_me, "Virtual position span end [s]");
  obs->add_option("--cadence", obs_cad, "Virtual position cadence [s]");
  obs->add_option("--halfspan", obs_half, "Grid half-span around the truth on each axis [s]");
  obs->add_option("--grid-step", obs_step, "Grid step on both axes [s]");
  obs->add_option("--height-km", obs_height, "Circular orbit height [km]");
  obs->add_option("--out", obs_out, "Output CSV path");
  obs->add_flag("--serial", obs_serial, "Evaluate grid cells on one thread");

  // ---- cw-phase ----
  auto* cwp = app.add_subcommand("cw-phase", "Normal-channel phase-plane trace CSV");
  double cw_pos0 = 0.0, cw_vel0 = 0.0, cw_u = 5e-3, cw_burn = 1200.0;
  double cw_n = 1.1068e-3, cw_tend = 11400.0, cw_step = 10.0;
  std::string cw_out = "cw_phase.csv";
  cwp->add_option("--pos0", cw_pos0, "Initial normal offset [m]");
  cwp->add_option("--vel0", cw_vel0, "Initial normal rate [m/s]");
  cwp->add_option("--u-normal", cw_u, "Normal thrust acceleration [m/s^2]");
  cwp->add_option("--burn", cw_burn, "Burn duration [s]");
  cwp->add_option("--mean-motion", cw_n, "Chief mean motion [rad/s]");
  cwp->add_option("--t-end", cw_tend, "Trace end time [s]");
  cwp->add_option("--step", cw_step, "Trace step [s]");
  cwp->add_option("--out", cw_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  try {
    if (*sim) return run_simulate(sim_scenario, sim_out_trk, sim_out_truth, sim_truth_cadence);
    if (*cor) {
      return run_correlate(cor_scenario, cor_trk, cor_post, cor_chi, cor_ball_km, cor_floor,
                           cor_step, cor_gate, cor_out, cor_serial);
    }
    if (*det) {
      return run_detect(det_scenario, det_trk, det_post, det_mode, det_j, det_mstep, det_dstep,
                        det_maxdur, det_estep, det_chi, det_ball_km, det_floor, det_cstep,
                        det_gate, det_summary, det_cand, det_serial);
    }
    if (*div) {
      return run_divergence(div_dir, div_u, div_durs, div_horizon, div_cadence, div_height,
                            div_out, div_serial);
    }
    if (*obs) {
      return run_observability(obs_dir, obs_u, obs_tb, obs_dur, obs_ms, obs_me, obs_cad,
                               obs_half, obs_step, obs_height, obs_out, obs_serial);
    }
    if (*cwp) return run_cw_phase(cw_pos0, cw_vel0, cw_u, cw_burn, cw_n, cw_tend, cw_step, cw_out);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
