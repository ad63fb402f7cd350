#include "mandet/detection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "mandet/frames.hpp"
#include "mandet/observation.hpp"

namespace mandet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lexicographic (delta_v, burn_start, burn_end) comparison among accepted
// candidates; keeps selection deterministic under ties.
bool better(const ManeuverCandidate& a, const ManeuverCandidate& b) {
  if (a.delta_v != b.delta_v) return a.delta_v < b.delta_v;
  if (a.burn_start.sec != b.burn_start.sec) return a.burn_start < b.burn_start;
  return a.burn_end < b.burn_end;
}

void select_minimum_delta_v(DetectionResult& result) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    if (!result.candidates[i].accepted) continue;
    if (!best || better(result.candidates[i], result.candidates[*best])) best = i;
  }
  result.selected = best;
}

// Duration-insensitive ridge test at the selected midpoint: impulsive when
// even the shortest grid duration fits there and the accepted delta-v
// spread across durations stays within 2% (the duration is not detectable);
// the shortest member's delta-v is then the reported equivalent impulse.
void classify_mode(DetectionResult& result, double duration_step) {
  if (!result.selected) {
    result.mode = DetectionMode::None;
    return;
  }
  const double m_star = result.candidates[*result.selected].midpoint().sec;
  double dv_min = kInf, dv_max = -kInf;
  std::optional<std::size_t> shortest;
  int members = 0;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const ManeuverCandidate& c = result.candidates[i];
    if (!c.accepted || std::abs(c.midpoint().sec - m_star) > 1e-6) continue;
    ++members;
    dv_min = std::min(dv_min, c.delta_v);
    dv_max = std::max(dv_max, c.delta_v);
    if (!shortest || c.duration() < result.candidates[*shortest].duration()) shortest = i;
  }
  const bool near_impulse_fits =
      shortest && result.candidates[*shortest].duration() <= 1.5 * duration_step;
  if (members >= 2 && near_impulse_fits && dv_min > 0.0 && (dv_max - dv_min) / dv_min < 0.02) {
    result.mode = DetectionMode::Impulsive;
    result.selected = shortest;
  } else {
    result.mode = DetectionMode::LongDuration;
  }
}

bool in_hint_region(const SearchWindow& window, double t) {
  return std::any_of(window.hint_intervals.begin(), window.hint_intervals.end(),
                     [t](const auto& iv) { return iv.first.sec <= t && t <= iv.second.sec; });
}

// Impulse-equivalent thrust seeds: the velocity gap between the post-orbit
// solution and the coasting pre-orbit at each candidate midpoint, rotated
// into VVLH and spread over the candidate duration. One trajectory sweep
// per orbit serves every candidate.
std::vector<Vec3> midpoint_seeds(const std::vector<ManeuverCandidate>& candidates,
                                 const InertialState& pre_state,
                                 const InertialState& post_state, const ForceModelConfig& cfg,
                                 const StepControl& ctrl) {
  std::vector<double> mids(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) mids[i] = candidates[i].midpoint().sec;
  std::vector<double> uniq = mids;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<Epoch> epochs;
  epochs.reserve(uniq.size());
  for (double m : uniq) epochs.push_back(Epoch{m});

  const Ephemeris pre_orbit(pre_state, cfg, ctrl);
  const Ephemeris post_orbit(post_state, cfg, ctrl);
  const auto pre_states = pre_orbit.at(epochs);
  const auto post_states = post_orbit.at(epochs);

  std::vector<Vec3> seeds(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto it = std::lower_bound(uniq.begin(), uniq.end(), mids[i]);
    const std::size_t k = static_cast<std::size_t>(it - uniq.begin());
    const Vec3 dv = post_states[k].v - pre_states[k].v;
    seeds[i] = vvlh_rotation(pre_states[k]).transpose() * dv / candidates[i].duration();
  }
  return seeds;
}

}  // namespace

SearchWindow build_search_window(Epoch t0, Epoch t1, const CorrelationReport& report,
                                 double max_duration) {
  if (!(t0 < t1) || max_duration <= 0.0) {
    throw InputError("build_search_window: bad window bounds");
  }
  SearchWindow win;
  win.t0 = t0;
  win.t1 = t1;
  win.max_duration = max_duration;

  // Sub-threshold epochs; the strict series decides when it fires at all,
  // otherwise the relaxed one.
  std::vector<double> hits;
  const auto collect = [&](const std::vector<double>& chi) {
    for (std::size_t i = 0; i < chi.size(); ++i) {
      if (chi[i] <= report.gates.chi_max) hits.push_back(report.epochs[i].sec);
    }
  };
  collect(report.chi_strict);
  if (hits.empty() && !report.chi_relaxed.empty()) collect(report.chi_relaxed);
  if (hits.empty()) {
    throw InputError("build_search_window: no sub-threshold correlation epochs");
  }

  const double pad = max_duration / 2.0;
  std::sort(hits.begin(), hits.end());
  for (double h : hits) {
    const double lo = std::max(h - pad, t0.sec);
    const double hi = std::min(h + pad, t1.sec);
    if (lo > hi) continue;
    if (!win.hint_intervals.empty() && lo <= win.hint_intervals.back().second.sec) {
      win.hint_intervals.back().second = Epoch{std::max(hi, win.hint_intervals.back().second.sec)};
    } else {
      win.hint_intervals.push_back({Epoch{lo}, Epoch{hi}});
    }
  }
  if (win.hint_intervals.empty()) {
    throw InputError("build_search_window: hint set empty after intersection with [t0, t1]");
  }
  return win;
}

DetectionResult detect(const InertialState& pre_state, const StackedMeasurements& meas,
                       const SearchWindow& window, const DetectionGrid& grid,
                       double j_threshold, const ForceModelConfig& cfg, ExecMode exec,
                       const InertialState* post_state, const GaussNewtonOptions& gn,
                       const StepControl& ctrl) {
  if (grid.midpoint_step <= 0.0 || grid.duration_step <= 0.0) {
    throw InputError("detect: grid steps must be positive");
  }
  DetectionResult result;
  result.j_threshold = j_threshold;

  const double t_latest = std::min(window.t1.sec, meas.first_epoch().sec);
  for (double m = window.t0.sec; m <= window.t1.sec + 1e-9; m += grid.midpoint_step) {
    if (!in_hint_region(window, m)) continue;
    for (double dur = grid.duration_step; dur <= window.max_duration + 1e-9;
         dur += grid.duration_step) {
      const double tb = m - dur / 2.0;
      const double tf = m + dur / 2.0;
      if (tb < window.t0.sec || tb < pre_state.epoch.sec || tf > t_latest) continue;
      ManeuverCandidate c;
      c.burn_start = Epoch{tb};
      c.burn_end = Epoch{tf};
      result.candidates.push_back(c);
    }
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const ManeuverCandidate& a, const ManeuverCandidate& b) {
              if (a.burn_start.sec != b.burn_start.sec) return a.burn_start < b.burn_start;
              return a.burn_end < b.burn_end;
            });

  std::vector<Vec3> seeds(result.candidates.size(), Vec3::Zero());
  if (post_state) seeds = midpoint_seeds(result.candidates, pre_state, *post_state, cfg, ctrl);

  parallel_for(exec, static_cast<std::ptrdiff_t>(result.candidates.size()),
               [&](std::ptrdiff_t i) {
                 ManeuverCandidate& c = result.candidates[i];
                 c.estimate = estimate_thrust(pre_state, c.burn_start, c.burn_end, meas, cfg,
                                              seeds[i], gn, ctrl);
                 c.delta_v = c.duration() * c.estimate.u_vvlh.norm();
                 c.j = c.estimate.converged ? c.estimate.wrms : kInf;
                 c.accepted = c.estimate.converged && c.j <= j_threshold;
               });

  select_minimum_delta_v(result);
  classify_mode(result, grid.duration_step);
  return result;
}

DetectionResult detect_impulsive(const InertialState& pre_state,
                                 const StackedMeasurements& meas, const SearchWindow& window,
                                 double epoch_step, double j_threshold,
                                 const ForceModelConfig& cfg, ExecMode exec,
                                 const InertialState* post_state, const GaussNewtonOptions& gn,
                                 const StepControl& ctrl) {
  if (epoch_step <= 0.0) throw InputError("detect_impulsive: epoch step must be positive");
  constexpr double kWindow = 1.0;  // [s]

  DetectionResult result;
  result.j_threshold = j_threshold;

  const double t_latest = std::min(window.t1.sec, meas.first_epoch().sec);
  for (double tm = window.t0.sec; tm <= window.t1.sec + 1e-9; tm += epoch_step) {
    if (!in_hint_region(window, tm)) continue;
    if (tm - kWindow / 2.0 < std::max(window.t0.sec, pre_state.epoch.sec)) continue;
    if (tm + kWindow / 2.0 > t_latest) continue;
    ManeuverCandidate c;
    c.burn_start = Epoch{tm - kWindow / 2.0};
    c.burn_end = Epoch{tm + kWindow / 2.0};
    result.candidates.push_back(c);
  }

  std::vector<Vec3> seeds(result.candidates.size(), Vec3::Zero());
  if (post_state) seeds = midpoint_seeds(result.candidates, pre_state, *post_state, cfg, ctrl);

  parallel_for(exec, static_cast<std::ptrdiff_t>(result.candidates.size()),
               [&](std::ptrdiff_t i) {
                 ManeuverCandidate& c = result.candidates[i];
                 c.estimate = estimate_thrust(pre_state, c.burn_start, c.burn_end, meas, cfg,
                                              seeds[i], gn, ctrl);
                 c.delta_v = c.duration() * c.estimate.u_vvlh.norm();
                 c.j = c.estimate.converged ? c.estimate.wrms : kInf;
                 c.accepted = c.estimate.converged && c.j <= j_threshold;
               });

  select_minimum_delta_v(result);
  result.mode = result.selected ? DetectionMode::Impulsive : DetectionMode::None;
  return result;
}

int count_accepted_regions(const DetectionResult& result, const DetectionGrid& grid) {
  // Union-find over accepted candidates on the (midpoint, duration) lattice.
  std::vector<std::size_t> idx;
  std::map<std::pair<long, long>, std::size_t> cell;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    if (!result.candidates[i].accepted) continue;
    const auto& c = result.candidates[i];
    const long mi = std::lround(c.midpoint().sec / grid.midpoint_step);
    const long di = std::lround(c.duration() / grid.duration_step);
    cell[{mi, di}] = idx.size();
    idx.push_back(i);
  }
  std::vector<std::size_t> parent(idx.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  const std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& [key, i] : cell) {
    for (long dm = -1; dm <= 1; ++dm) {
      for (long dd = -1; dd <= 1; ++dd) {
        if (dm == 0 && dd == 0) continue;
        const auto it = cell.find({key.first + dm, key.second + dd});
        if (it != cell.end()) parent[find(i)] = find(it->second);
      }
    }
  }
  int regions = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (find(i) == i) ++regions;
  }
  return regions;
}

}  // namespace mandet
