#include "mandet/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "mandet/frames.hpp"

namespace mandet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool well_conditioned(const Eigen::SelfAdjointEigenSolver<Mat3>& es) {
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 && hi / lo < 1e14;
}

// One Gauss-Newton evaluation of the thrust problem at a fixed u: residuals,
// J, and the normal-equation pieces. Propagates trajectory + variational
// matrices from the pre-maneuver state with always-on sensitivity forcing,
// then assembles the window sensitivity by differencing.
struct ThrustEvaluation {
  double wrms = kInf;
  Mat3 normal = Mat3::Zero();
  Vec3 gradient = Vec3::Zero();
};

ThrustEvaluation evaluate_thrust(const InertialState& pre_state, Epoch burn_start,
                                 Epoch burn_end, const Vec3& u,
                                 const StackedMeasurements& meas, const ForceModelConfig& cfg,
                                 const StepControl& ctrl) {
  const std::size_t n = meas.pairs();

  std::vector<Epoch> sweep;
  sweep.reserve(n + 2);
  sweep.push_back(burn_start);
  sweep.push_back(burn_end);
  sweep.insert(sweep.end(), meas.epochs.begin(), meas.epochs.end());

  const ManeuverPolicy policy{burn_start, burn_end, u};

  Mat6 phi_b = Mat6::Identity(), phi_f = Mat6::Identity();
  Mat63 s_b = Mat63::Zero(), s_f = Mat63::Zero();
  std::vector<VariationalState> at_meas;
  at_meas.reserve(n);

  std::size_t idx = 0;
  propagate_variational_path(pre_state, cfg, sweep,
                             [&](const VariationalState& vs) {
                               if (idx == 0) {
                                 phi_b = vs.stm;
                                 s_b = vs.sensitivity;
                               } else if (idx == 1) {
                                 phi_f = vs.stm;
                                 s_f = vs.sensitivity;
                               } else {
                                 at_meas.push_back(vs);
                               }
                               ++idx;
                             },
                             policy, std::nullopt, ctrl);

  const Mat63 s_window = sensitivity_between(s_f, stm_between(phi_f, phi_b), s_b);
  const Mat6 phi_f_inv = phi_f.fullPivLu().inverse();

  ThrustEvaluation ev;
  std::vector<double> resid(2 * n), sig(n);
  for (std::size_t k = 0; k < n; ++k) {
    const VariationalState& vs = at_meas[k];
    const InertialState& obs = meas.observer_states[k];
    const AnglePair pred = measure_corrected(vs.state, obs);
    const double nu_a = wrap_angle(meas.angles[2 * k] - pred.alpha);
    const double nu_d = meas.angles[2 * k + 1] - pred.delta;
    resid[2 * k] = nu_a;
    resid[2 * k + 1] = nu_d;
    sig[k] = meas.sigmas[k];

    const MeasurementPartials hp = measurement_partials(vs.state, obs);
    Eigen::Matrix<double, 2, 6> h26;
    h26 << hp.wrt_position, hp.wrt_velocity;
    const Mat23 m = h26 * (vs.stm * phi_f_inv) * s_window;

    const double w = 1.0 / (sig[k] * sig[k]);
    ev.normal.noalias() += m.transpose() * m * w;
    ev.gradient.noalias() += m.transpose() * Eigen::Vector2d(nu_a, nu_d) * w;
  }
  ev.wrms = performance_index(resid, sig);
  return ev;
}

}  // namespace

StackedMeasurements stack_tracklets(std::span<const Tracklet> tracklets,
                                    const Ephemeris& observer, double sigma_override) {
  StackedMeasurements out;
  for (const Tracklet& trk : tracklets) {
    for (const AngularMeasurement& m : trk.measurements) {
      if (!out.epochs.empty() && m.epoch <= out.epochs.back()) {
        throw InputError("stack_tracklets: measurement epochs must be strictly increasing");
      }
      out.epochs.push_back(m.epoch);
      out.angles.push_back(m.alpha);
      out.angles.push_back(m.delta);
      const double sigma = sigma_override > 0.0 ? sigma_override : m.sigma;
      if (sigma <= 0.0) throw InputError("stack_tracklets: nonpositive sigma");
      out.sigmas.push_back(sigma);
    }
  }
  if (out.epochs.empty()) throw InputError("stack_tracklets: no measurements");
  out.observer_states = observer.at(out.epochs);
  return out;
}

double performance_index(std::span<const double> residuals, std::span<const double> sigmas) {
  if (residuals.size() != 2 * sigmas.size()) {
    throw InputError("performance_index: residuals must hold 2 entries per sigma");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const double w = 1.0 / (sigmas[k] * sigmas[k]);
    acc += residuals[2 * k] * residuals[2 * k] * w;
    acc += residuals[2 * k + 1] * residuals[2 * k + 1] * w;
  }
  return std::sqrt(acc / static_cast<double>(residuals.size()));
}

ThrustEstimate estimate_thrust(const InertialState& pre_state, Epoch burn_start,
                               Epoch burn_end, const StackedMeasurements& meas,
                               const ForceModelConfig& cfg, const Vec3& u0,
                               const GaussNewtonOptions& opts, const StepControl& ctrl) {
  if (!(pre_state.epoch <= burn_start && burn_start < burn_end)) {
    throw InputError("estimate_thrust: require t0 <= burn_start < burn_end");
  }
  if (burn_end > meas.first_epoch()) {
    throw InputError("estimate_thrust: burn window must close before the first measurement");
  }

  ThrustEstimate est;
  est.u_vvlh = u0;

  Vec3 u = u0;
  Vec3 u_prev = u0;
  double prev_j = kInf;
  int halvings = 0;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    est.iterations = iter;
    const ThrustEvaluation ev = evaluate_thrust(pre_state, burn_start, burn_end, u, meas, cfg, ctrl);

    if (ev.wrms >= prev_j && iter > 1) {
      // Fallback: halve the last step until J improves again.
      if (++halvings > opts.max_halvings) {
        est.u_vvlh = u;
        est.wrms = ev.wrms;
        est.converged = false;
        return est;
      }
      u = u_prev + 0.5 * (u - u_prev);
      continue;
    }
    halvings = 0;

    est.u_vvlh = u;
    est.wrms = ev.wrms;
    est.wrms_history.push_back(ev.wrms);

    const Eigen::SelfAdjointEigenSolver<Mat3> es(ev.normal);
    if (!well_conditioned(es)) {
      est.converged = false;  // singular normal matrix; caller discards
      return est;
    }
    est.covariance = es.eigenvectors() *
                     es.eigenvalues().cwiseInverse().asDiagonal() *
                     es.eigenvectors().transpose();

    if (iter > 1 && std::abs(prev_j - ev.wrms) < opts.wrms_tol * std::max(prev_j, 1e-12)) {
      est.converged = true;
      return est;
    }
    prev_j = ev.wrms;

    const Vec3 du = es.eigenvectors() *
                    es.eigenvalues().cwiseInverse().asDiagonal() *
                    (es.eigenvectors().transpose() * ev.gradient);
    u_prev = u;
    u += du;

    if (du.norm() / std::max(u.norm(), 1e-9) < opts.step_tol) {
      // Final evaluation at the stepped u so the reported J matches u_hat.
      const ThrustEvaluation fin =
          evaluate_thrust(pre_state, burn_start, burn_end, u, meas, cfg, ctrl);
      est.u_vvlh = u;
      est.wrms = fin.wrms;
      est.wrms_history.push_back(fin.wrms);
      const Eigen::SelfAdjointEigenSolver<Mat3> esf(fin.normal);
      if (well_conditioned(esf)) {
        est.covariance = esf.eigenvectors() *
                         esf.eigenvalues().cwiseInverse().asDiagonal() *
                         esf.eigenvectors().transpose();
      }
      est.converged = true;
      est.iterations = iter;
      return est;
    }
  }
  est.converged = false;  // out of iterations
  return est;
}

BlsResult bls_orbit_determination(const StackedMeasurements& meas, const InertialState& guess,
                                  const ForceModelConfig& cfg, const BlsOptions& opts,
                                  const StepControl& ctrl) {
  if (meas.pairs() < 4) {
    throw InputError("bls_orbit_determination: need at least 4 measurement pairs");
  }
  const Epoch t_est = meas.first_epoch();

  BlsResult res;
  res.state = guess.epoch == t_est ? guess : propagate(guess, cfg, std::nullopt, t_est, ctrl);
  res.state.epoch = t_est;

  const std::size_t n = meas.pairs();
  Vec6 x;
  x << res.state.r, res.state.v;
  Vec6 x_prev = x;

  double prev_j = kInf;
  int divergent_streak = 0;
  int halvings = 0;

  const auto evaluate = [&](const Vec6& xe, Mat6& normal, Vec6& gradient) {
    normal.setZero();
    gradient.setZero();
    InertialState s0;
    s0.epoch = t_est;
    s0.r = xe.head<3>();
    s0.v = xe.tail<3>();
    std::vector<double> resid(2 * n), sig(meas.sigmas.begin(), meas.sigmas.end());
    std::size_t k = 0;
    propagate_variational_path(
        s0, cfg, meas.epochs,
        [&](const VariationalState& vs) {
          const InertialState& obs = meas.observer_states[k];
          const AnglePair pred = measure_corrected(vs.state, obs);
          const double nu_a = wrap_angle(meas.angles[2 * k] - pred.alpha);
          const double nu_d = meas.angles[2 * k + 1] - pred.delta;
          resid[2 * k] = nu_a;
          resid[2 * k + 1] = nu_d;

          const MeasurementPartials hp = measurement_partials(vs.state, obs);
          Eigen::Matrix<double, 2, 6> h26;
          h26 << hp.wrt_position, hp.wrt_velocity;
          const Eigen::Matrix<double, 2, 6> h = h26 * vs.stm;
          const double w = 1.0 / (sig[k] * sig[k]);
          normal.noalias() += h.transpose() * h * w;
          gradient.noalias() += h.transpose() * Eigen::Vector2d(nu_a, nu_d) * w;
          ++k;
        },
        std::nullopt, std::nullopt, ctrl);
    return performance_index(resid, sig);
  };

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    res.iterations = iter;
    Mat6 normal;
    Vec6 gradient;
    const double j = evaluate(x, normal, gradient);

    if (j >= prev_j && iter > 1) {
      if (++halvings <= opts.max_halvings) {
        x = x_prev + 0.5 * (x - x_prev);
        continue;
      }
      if (++divergent_streak >= opts.max_divergent) {
        res.wrms = j;
        res.converged = false;
        return res;
      }
    } else {
      divergent_streak = 0;
    }
    halvings = 0;

    res.state.r = x.head<3>();
    res.state.v = x.tail<3>();
    res.wrms = j;

    const Eigen::SelfAdjointEigenSolver<Mat6> es(normal);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo > 1e16) {
      res.converged = false;  // rank-deficient geometry
      return res;
    }
    res.covariance = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                     es.eigenvectors().transpose();

    if (iter > 1 && std::abs(prev_j - j) < opts.wrms_rel_tol * std::max(prev_j, 1e-12)) {
      res.converged = true;
      return res;
    }
    if (j < 1e-12) {  // exact fit (noiseless truth start)
      res.converged = true;
      return res;
    }
    prev_j = j;

    const Vec6 dx = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                    (es.eigenvectors().transpose() * gradient);
    x_prev = x;
    x += dx;
  }
  res.converged = false;
  return res;
}

BlsResult estimate_post_maneuver_orbit(const InertialState& pre_state, Epoch gap_end,
                                       const StackedMeasurements& meas,
                                       const ForceModelConfig& cfg, double accept_wrms,
                                       const BlsOptions& opts, const StepControl& ctrl) {
  const auto try_seed = [&](const InertialState& seed) {
    return bls_orbit_determination(meas, seed, cfg, opts, ctrl);
  };

  BlsResult best = try_seed(pre_state);
  if (best.converged && best.wrms <= accept_wrms) return best;

  // Impulse-hypothesis ladder: in-track kicks of growing size applied at
  // gap quantiles, middle epochs first. Orbit-keeping burns displace the
  // orbit mostly along-track, so one rung lands inside the fit's basin.
  const double dv_ladder[] = {1.0, 2.5, 5.0, 10.0, 20.0, 40.0};
  const int quantiles[] = {3, 2, 4, 1, 5};
  const double gap = gap_end - pre_state.epoch;
  for (double dv : dv_ladder) {
    for (int q : quantiles) {
      for (double sign : {+1.0, -1.0}) {
        const Epoch t_kick = pre_state.epoch + gap * q / 6.0;
        InertialState seed = propagate(pre_state, cfg, std::nullopt, t_kick, ctrl);
        ImpulsiveManeuver kick;
        kick.epoch = t_kick;
        kick.dv_eci = vvlh_rotation(seed) * Vec3(sign * dv, 0.0, 0.0);
        seed = apply_impulse(seed, kick);
        const BlsResult res = try_seed(seed);
        if (res.converged && res.wrms <= accept_wrms) return res;
        if (res.converged && (!best.converged || res.wrms < best.wrms)) best = res;
      }
    }
  }
  return best;
}

ImpulsiveEstimate impulsive_estimate(const InertialState& pre_state, Epoch t_m,
                                     const StackedMeasurements& meas,
                                     const ForceModelConfig& cfg, double window_s,
                                     const GaussNewtonOptions& opts, const StepControl& ctrl) {
  if (window_s <= 0.0) throw InputError("impulsive_estimate: window must be positive");
  const Epoch tb = t_m - window_s / 2.0;
  const Epoch tf = t_m + window_s / 2.0;
  const ThrustEstimate te = estimate_thrust(pre_state, tb, tf, meas, cfg, Vec3::Zero(), opts, ctrl);

  ImpulsiveEstimate out;
  const InertialState mid = propagate(pre_state, cfg, std::nullopt, t_m, ctrl);
  out.dv_eci = window_s * (vvlh_rotation(mid) * te.u_vvlh);
  out.delta_v = window_s * te.u_vvlh.norm();
  out.wrms = te.wrms;
  out.iterations = te.iterations;
  out.converged = te.converged;
  return out;
}

}  // namespace mandet
