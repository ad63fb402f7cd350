#include "mandet/experiments.hpp"

#include <cmath>
#include <ostream>

#include "mandet/elements.hpp"
#include "mandet/frames.hpp"

namespace mandet {

namespace {

InertialState circular_start(double height_m, const ForceModelConfig& force) {
  OrbitalElements el;
  el.a_km = (constants::earth_radius + height_m) / 1000.0;
  return elements_to_state(el, force.mu, Epoch{0.0});
}

double mean_separation(const InertialState& s0, const ForceModelConfig& force,
                       const Vec3& u, double duration, double horizon, double cadence,
                       const StepControl& ctrl) {
  const ManeuverPolicy burn{Epoch{0.0}, Epoch{duration}, u};
  const Epoch mid{duration / 2.0};

  ImpulsiveManeuver imp;
  imp.epoch = mid;
  const InertialState at_mid = propagate(s0, force, std::nullopt, mid, ctrl);
  imp.dv_eci = vvlh_rotation(at_mid) * (duration * u);
  const InertialState kicked = apply_impulse(at_mid, imp);

  std::vector<Epoch> grid;
  for (double t = 0.0; t <= horizon + 1e-9; t += cadence) grid.push_back(Epoch{t});

  std::vector<Vec3> r_burn(grid.size());
  std::size_t i = 0;
  propagate_path(s0, force, burn, grid, [&](const InertialState& s) { r_burn[i++] = s.r; },
                 ctrl);

  std::vector<Epoch> before, after;
  for (const Epoch& t : grid) (t <= mid ? before : after).push_back(t);
  std::vector<Vec3> r_imp;
  r_imp.reserve(grid.size());
  propagate_path(s0, force, std::nullopt, before,
                 [&](const InertialState& s) { r_imp.push_back(s.r); }, ctrl);
  propagate_path(kicked, force, std::nullopt, after,
                 [&](const InertialState& s) { r_imp.push_back(s.r); }, ctrl);

  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) acc += (r_burn[k] - r_imp[k]).norm();
  return acc / static_cast<double>(grid.size());
}

}  // namespace

std::vector<DivergenceRow> divergence_study(const DivergenceConfig& cfg, ExecMode exec) {
  const InertialState s0 = circular_start(cfg.orbit_height_m, cfg.force);
  const Vec3 dir = cfg.direction.normalized();

  std::vector<DivergenceRow> rows(cfg.durations.size());
  parallel_for(exec, static_cast<std::ptrdiff_t>(cfg.durations.size()), [&](std::ptrdiff_t i) {
    rows[i].duration_s = cfg.durations[i];
    rows[i].mean_diff_m = mean_separation(s0, cfg.force, cfg.u_mag * dir, cfg.durations[i],
                                          cfg.horizon_s, cfg.cadence_s, cfg.step);
  });
  return rows;
}

void write_divergence_csv(std::ostream& os, const std::vector<DivergenceRow>& rows) {
  os << "duration_s,mean_diff_m\n";
  for (const DivergenceRow& r : rows) os << r.duration_s << ',' << r.mean_diff_m << '\n';
}

namespace {

// Thrust fit against virtual position measurements for one (tb, tf) cell;
// returns the RMS of 3-D position residuals at the fitted thrust.
double fit_position_rms(const InertialState& s0, const ForceModelConfig& force, double tb,
                        double tf, const std::vector<Epoch>& meas_epochs,
                        const std::vector<Vec3>& meas_r, int max_iterations,
                        const StepControl& ctrl) {
  const std::size_t n = meas_epochs.size();
  std::vector<Epoch> sweep;
  sweep.reserve(n + 2);
  sweep.push_back(Epoch{tb});
  sweep.push_back(Epoch{tf});
  sweep.insert(sweep.end(), meas_epochs.begin(), meas_epochs.end());

  Vec3 u = Vec3::Zero();
  Vec3 u_prev = u;
  double prev_rms = std::numeric_limits<double>::infinity();
  double rms = prev_rms;
  int halvings = 0;

  for (int iter = 1; iter <= max_iterations; ++iter) {
    const ManeuverPolicy policy{Epoch{tb}, Epoch{tf}, u};
    Mat6 phi_b, phi_f;
    Mat63 s_b, s_f;
    Mat3 normal = Mat3::Zero();
    Vec3 gradient = Vec3::Zero();
    double acc = 0.0;
    std::size_t idx = 0;
    Mat6 phi_f_inv;
    Mat63 s_window;
    propagate_variational_path(
        s0, force, sweep,
        [&](const VariationalState& vs) {
          if (idx == 0) {
            phi_b = vs.stm;
            s_b = vs.sensitivity;
          } else if (idx == 1) {
            phi_f = vs.stm;
            s_f = vs.sensitivity;
            phi_f_inv = phi_f.fullPivLu().inverse();
            s_window = sensitivity_between(s_f, stm_between(phi_f, phi_b), s_b);
          } else {
            const std::size_t k = idx - 2;
            const Vec3 resid = meas_r[k] - vs.state.r;
            const Mat3 m = (vs.stm * phi_f_inv).topLeftCorner<3, 6>() * s_window;
            normal.noalias() += m.transpose() * m;
            gradient.noalias() += m.transpose() * resid;
            acc += resid.squaredNorm();
          }
          ++idx;
        },
        policy, std::nullopt, ctrl);
    rms = std::sqrt(acc / static_cast<double>(n));

    if (rms >= prev_rms && iter > 1) {
      if (++halvings > 6) break;
      u = u_prev + 0.5 * (u - u_prev);
      continue;
    }
    halvings = 0;
    if (iter > 1 && std::abs(prev_rms - rms) < 1e-4 * std::max(prev_rms, 1e-9)) break;
    prev_rms = rms;

    const Eigen::LDLT<Mat3> ldlt(normal);
    if (ldlt.info() != Eigen::Success) break;
    const Vec3 du = ldlt.solve(gradient);
    u_prev = u;
    u += du;
    if (du.norm() / std::max(u.norm(), 1e-12) < 1e-8) {
      // one last residual pass at the stepped thrust
      const ManeuverPolicy fin{Epoch{tb}, Epoch{tf}, u};
      double facc = 0.0;
      std::size_t k = 0;
      propagate_path(s0, force, fin, meas_epochs,
                     [&](const InertialState& s) { facc += (meas_r[k++] - s.r).squaredNorm(); },
                     ctrl);
      rms = std::sqrt(facc / static_cast<double>(n));
      break;
    }
  }
  return rms;
}

}  // namespace

ObservabilityGrid observability_map(const ObservabilityConfig& cfg, ExecMode exec) {
  const InertialState s0 = circular_start(cfg.orbit_height_m, cfg.force);
  const Vec3 u_true = cfg.u_mag * cfg.direction.normalized();
  const double truth_tb = cfg.burn_start_s;
  const double truth_tf = cfg.burn_start_s + cfg.burn_duration_s;

  std::vector<Epoch> meas_epochs;
  for (double t = cfg.meas_start_s; t <= cfg.meas_end_s + 1e-9; t += cfg.cadence_s) {
    meas_epochs.push_back(Epoch{t});
  }
  const ManeuverPolicy truth{Epoch{truth_tb}, Epoch{truth_tf}, u_true};
  std::vector<Vec3> meas_r(meas_epochs.size());
  std::size_t i = 0;
  propagate_path(s0, cfg.force, truth, meas_epochs,
                 [&](const InertialState& s) { meas_r[i++] = s.r; }, cfg.step);

  ObservabilityGrid grid;
  grid.truth_tb = truth_tb;
  grid.truth_tf = truth_tf;
  for (double t = truth_tb - cfg.grid_halfspan_s; t <= truth_tb + cfg.grid_halfspan_s + 1e-9;
       t += cfg.grid_step_s) {
    grid.tb_axis.push_back(t);
  }
  for (double t = truth_tf - cfg.grid_halfspan_s; t <= truth_tf + cfg.grid_halfspan_s + 1e-9;
       t += cfg.grid_step_s) {
    grid.tf_axis.push_back(t);
  }
  const auto nb = static_cast<Eigen::Index>(grid.tb_axis.size());
  const auto nf = static_cast<Eigen::Index>(grid.tf_axis.size());
  grid.rms.setConstant(nb, nf, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index bi = 0; bi < nb; ++bi) {
    for (Eigen::Index fi = 0; fi < nf; ++fi) {
      const double tb = grid.tb_axis[bi];
      const double tf = grid.tf_axis[fi];
      if (tb >= tf) continue;                    // masked: no window
      if (tb < 0.0 || tf > cfg.meas_start_s) continue;
      cells.push_back({bi, fi});
    }
  }

  parallel_for(exec, static_cast<std::ptrdiff_t>(cells.size()), [&](std::ptrdiff_t c) {
    const auto [bi, fi] = cells[c];
    grid.rms(bi, fi) = fit_position_rms(s0, cfg.force, grid.tb_axis[bi], grid.tf_axis[fi],
                                        meas_epochs, meas_r, cfg.max_iterations, cfg.step);
  });
  return grid;
}

void write_observability_csv(std::ostream& os, const ObservabilityGrid& grid) {
  os << "tb_offset_s,tf_offset_s,rms_m\n";
  for (std::size_t bi = 0; bi < grid.tb_axis.size(); ++bi) {
    for (std::size_t fi = 0; fi < grid.tf_axis.size(); ++fi) {
      const double v = grid.rms(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(fi));
      if (!std::isfinite(v)) continue;
      os << grid.tb_axis[bi] << ',' << grid.tf_axis[fi] << ',' << v << '\n';
    }
  }
}

}  // namespace mandet
