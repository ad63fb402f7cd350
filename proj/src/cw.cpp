#include "mandet/cw.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <ostream>

namespace mandet {

namespace {

namespace ode = boost::numeric::odeint;

using State6 = std::array<double, 6>;

// x'' - 2n z' = u_x;  y'' + n^2 y = u_y;  z'' + 2n x' - 3n^2 z = u_z
struct CwRhs {
  double n;
  Vec3 u;
  void operator()(const State6& x, State6& dxdt, double /*t*/) const {
    dxdt[0] = x[3];
    dxdt[1] = x[4];
    dxdt[2] = x[5];
    dxdt[3] = 2.0 * n * x[5] + u.x();
    dxdt[4] = -n * n * x[1] + u.y();
    dxdt[5] = -2.0 * n * x[3] + 3.0 * n * n * x[2] + u.z();
  }
};

}  // namespace

RelativeState cw_propagate(const RelativeState& rel, const Vec3& u, double dt,
                           const StepControl& ctrl) {
  if (rel.n <= 0.0) throw InputError("cw_propagate: mean motion must be positive");
  if (dt < 0.0) throw InputError("cw_propagate: negative propagation span");
  RelativeState out = rel;
  if (dt == 0.0) return out;

  State6 x{rel.dr.x(), rel.dr.y(), rel.dr.z(), rel.dv.x(), rel.dv.y(), rel.dv.z()};
  const CwRhs rhs{rel.n, u};
  auto stepper = ode::make_controlled(ctrl.abs_tol, ctrl.rel_tol,
                                      ode::runge_kutta_fehlberg78<State6>());
  double t = 0.0;
  double h = std::min(ctrl.initial_step, dt);
  long guard = 0;
  while (t < dt) {
    double attempt = std::min(h, dt - t);
    const bool clipped = attempt >= dt - t;
    const auto res = stepper.try_step(rhs, x, t, attempt);
    if (res == ode::success) {
      if (!clipped) h = std::min(attempt, ctrl.max_step);
    } else {
      h = attempt;
    }
    if (++guard > 50'000'000L) throw IntegrationError("cw_propagate: step limit exceeded");
  }
  out.dr = Vec3(x[0], x[1], x[2]);
  out.dv = Vec3(x[3], x[4], x[5]);
  return out;
}

NormalChannelState cw_normal_free(double pos0, double vel0, double n, double dt) {
  const double c = std::cos(n * dt);
  const double s = std::sin(n * dt);
  return {vel0 / n * s + pos0 * c, vel0 * c - n * pos0 * s};
}

NormalChannelState cw_normal_thrust(double pos0, double vel0, double u_normal, double n,
                                    double dt) {
  const double c = std::cos(n * dt);
  const double s = std::sin(n * dt);
  const double offset = u_normal / (n * n);
  return {vel0 / n * s + (pos0 - offset) * c + offset,
          vel0 * c - (n * pos0 - u_normal / n) * s};
}

void write_normal_phase_csv(std::ostream& os, double pos0, double vel0, double u_normal,
                            double burn_duration, double n, double t_end, double step) {
  os << "t_s,dy_m,dydot_mps\n";
  NormalChannelState at_cutoff = cw_normal_thrust(pos0, vel0, u_normal, n, burn_duration);
  for (double t = 0.0; t <= t_end + 1e-9; t += step) {
    NormalChannelState s = t <= burn_duration
                               ? cw_normal_thrust(pos0, vel0, u_normal, n, t)
                               : cw_normal_free(at_cutoff.pos, at_cutoff.vel, n, t - burn_duration);
    os << t << ',' << s.pos << ',' << s.vel << '\n';
  }
}

}  // namespace mandet
