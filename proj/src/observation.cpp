#include "mandet/observation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mandet {

namespace {

// splitmix64; decorrelates per-window substream seeds.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double wrap_angle(double x) {
  double w = std::fmod(x + M_PI, 2.0 * M_PI);
  if (w < 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

AnglePair measure_simple(const Vec3& r_target, const Vec3& r_observer) {
  const Vec3 d = r_target - r_observer;
  const double rho = d.norm();
  if (rho == 0.0) throw DegenerateGeometryError("measure_simple: zero range");
  return {std::atan2(d.y(), d.x()), std::asin(std::clamp(d.z() / rho, -1.0, 1.0))};
}

AnglePair measure_corrected(const InertialState& target, const InertialState& observer,
                            double light_speed) {
  const Vec3 sep = target.r - observer.r;
  const double rho = sep.norm();
  if (rho == 0.0) throw DegenerateGeometryError("measure_corrected: zero range");
  const double lt = rho / light_speed;
  const Vec3 q = sep - lt * target.v + lt * observer.v;
  const double rho_corr = q.norm();
  return {std::atan2(q.y(), q.x()), std::asin(std::clamp(q.z() / rho_corr, -1.0, 1.0))};
}

MeasurementPartials measurement_partials(const InertialState& target,
                                         const InertialState& observer, double light_speed) {
  const Vec3 d = target.r - observer.r;
  const double xy2 = d.x() * d.x() + d.y() * d.y();
  const double rho2 = d.squaredNorm();
  if (xy2 <= 1e-24 * rho2) {
    throw DegenerateGeometryError("measurement_partials: line of sight at the pole");
  }
  const double xy = std::sqrt(xy2);

  MeasurementPartials p;
  p.wrt_position << -d.y() / xy2, d.x() / xy2, 0.0,
      -d.x() * d.z() / (rho2 * xy), -d.y() * d.z() / (rho2 * xy), xy / rho2;
  p.wrt_velocity = (std::sqrt(rho2) / light_speed) * p.wrt_position;
  return p;
}

InertialState Ephemeris::at(Epoch t) const {
  const Epoch one[1] = {t};
  InertialState out = anchor_;
  auto states = at(std::span<const Epoch>(one));
  if (!states.empty()) out = states.front();
  return out;
}

std::vector<InertialState> Ephemeris::at(std::span<const Epoch> epochs) const {
  std::vector<InertialState> out(epochs.size());
  if (epochs.empty()) return out;

  // Split around the anchor; each side is one sweep.
  std::vector<Epoch> backward, forward;
  for (const Epoch& e : epochs) {
    (e < anchor_.epoch ? backward : forward).push_back(e);
  }
  std::reverse(backward.begin(), backward.end());

  std::vector<InertialState> fwd_states, bwd_states;
  fwd_states.reserve(forward.size());
  bwd_states.reserve(backward.size());

  if (!forward.empty()) {
    if (impulse_ && impulse_->epoch > anchor_.epoch) {
      // Free until the kick, then continue from the incremented state.
      std::vector<Epoch> before, after;
      for (const Epoch& e : forward) (e <= impulse_->epoch ? before : after).push_back(e);
      InertialState at_kick = anchor_;
      if (!before.empty()) {
        propagate_path(anchor_, cfg_, std::nullopt, before,
                       [&](const InertialState& s) { fwd_states.push_back(s); }, ctrl_);
      }
      at_kick = propagate(anchor_, cfg_, std::nullopt, impulse_->epoch, ctrl_);
      at_kick = apply_impulse(at_kick, *impulse_);
      if (!after.empty()) {
        propagate_path(at_kick, cfg_, std::nullopt, after,
                       [&](const InertialState& s) { fwd_states.push_back(s); }, ctrl_);
      }
    } else {
      propagate_path(anchor_, cfg_, policy_, forward,
                     [&](const InertialState& s) { fwd_states.push_back(s); }, ctrl_);
    }
  }
  if (!backward.empty()) {
    InertialState start = anchor_;
    if (impulse_ && impulse_->epoch < anchor_.epoch) {
      throw InputError("Ephemeris: backward queries across an impulse are not supported");
    }
    propagate_path(start, cfg_, policy_, backward,
                   [&](const InertialState& s) { bwd_states.push_back(s); }, ctrl_);
  }

  std::size_t fi = 0, bi = 0;
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    if (epochs[k] < anchor_.epoch) {
      out[k] = bwd_states[backward.size() - 1 - bi];
      ++bi;
    } else {
      out[k] = fwd_states[fi++];
    }
  }
  return out;
}

std::vector<Tracklet> simulate_tracklets(std::span<const TrackletWindow> windows,
                                         const Ephemeris& target, const Ephemeris& observer,
                                         double sigma_rad, double cadence_s,
                                         std::uint64_t seed, int observer_id) {
  if (sigma_rad < 0.0) throw InputError("simulate_tracklets: negative sigma");
  if (cadence_s <= 0.0) throw InputError("simulate_tracklets: cadence must be positive");

  std::vector<std::vector<Epoch>> window_epochs(windows.size());
  std::vector<Epoch> all;
  double prev_end = -std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    if (win.duration_s < 0.0) throw InputError("simulate_tracklets: negative window duration");
    if (win.start_offset_s <= prev_end) {
      throw InputError("simulate_tracklets: windows must be increasing and non-overlapping");
    }
    prev_end = win.start_offset_s + win.duration_s;
    for (double t = win.start_offset_s; t <= win.start_offset_s + win.duration_s + 1e-9;
         t += cadence_s) {
      window_epochs[w].push_back(Epoch{t});
      all.push_back(Epoch{t});
    }
    if (window_epochs[w].empty()) throw InputError("simulate_tracklets: empty window");
  }

  const auto target_states = target.at(all);
  const auto observer_states = observer.at(all);

  std::vector<Tracklet> out(windows.size());
  std::size_t k = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    std::mt19937_64 rng(substream_seed(seed, w));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Tracklet& trk = out[w];
    trk.id = static_cast<int>(w);
    trk.observer_id = observer_id;
    trk.measurements.reserve(window_epochs[w].size());
    for (const Epoch& t : window_epochs[w]) {
      const AnglePair ang = measure_corrected(target_states[k], observer_states[k]);
      ++k;
      AngularMeasurement m;
      m.epoch = t;
      m.alpha = wrap_angle(ang.alpha + sigma_rad * gauss(rng));
      m.delta = ang.delta + sigma_rad * gauss(rng);
      m.sigma = sigma_rad;
      trk.measurements.push_back(m);
    }
  }
  return out;
}

}  // namespace mandet
