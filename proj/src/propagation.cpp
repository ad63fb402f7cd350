#include "mandet/propagation.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>

#include "mandet/frames.hpp"
#include "mandet/gravity.hpp"

namespace mandet {

namespace {

namespace ode = boost::numeric::odeint;

using State6 = std::array<double, 6>;
using State60 = std::array<double, 60>;

struct TrajectoryRhs {
  const ForceModelConfig* cfg;
  Vec3 thrust_vvlh = Vec3::Zero();
  bool thrust_on = false;

  void operator()(const State6& x, State6& dxdt, double /*t*/) const {
    Eigen::Map<const Vec3> r(x.data());
    Eigen::Map<const Vec3> v(x.data() + 3);
    Eigen::Map<Vec3> dr(dxdt.data());
    Eigen::Map<Vec3> dv(dxdt.data() + 3);
    dr = v;
    Vec3 a = gravity(r, *cfg);
    if (thrust_on) a += vvlh_rotation(r, v) * thrust_vvlh;
    dv = a;
  }
};

// State layout: [r(3), v(3), Phi(36, col-major), S(18, col-major)].
struct VariationalRhs {
  const ForceModelConfig* cfg;
  Vec3 thrust_vvlh = Vec3::Zero();
  bool thrust_on = false;
  bool forcing_on = false;

  void operator()(const State60& x, State60& dxdt, double /*t*/) const {
    Eigen::Map<const Vec3> r(x.data());
    Eigen::Map<const Vec3> v(x.data() + 3);
    Eigen::Map<const Mat6> phi(x.data() + 6);
    Eigen::Map<const Mat63> sen(x.data() + 42);
    Eigen::Map<Vec3> dr(dxdt.data());
    Eigen::Map<Vec3> dv(dxdt.data() + 3);
    Eigen::Map<Mat6> dphi(dxdt.data() + 6);
    Eigen::Map<Mat63> dsen(dxdt.data() + 42);

    dr = v;
    Vec3 a = gravity(r, *cfg);
    Mat3 c;
    if (thrust_on || forcing_on) c = vvlh_rotation(r, v);
    if (thrust_on) a += c * thrust_vvlh;
    dv = a;

    const Mat3 g = gravity_gradient(r, *cfg);
    dphi.topRows<3>() = phi.bottomRows<3>();
    dphi.bottomRows<3>().noalias() = g * phi.topRows<3>();
    dsen.topRows<3>() = sen.bottomRows<3>();
    dsen.bottomRows<3>().noalias() = g * sen.topRows<3>();
    if (forcing_on) dsen.bottomRows<3>() += c;
  }
};

// One integration node: a time the stepper must land on exactly. Only
// `visit` nodes are reported to the caller.
struct Node {
  double t;
  bool visit;
};

std::vector<Node> build_nodes(double t0, std::span<const Epoch> epochs,
                              const std::optional<ManeuverPolicy>& policy,
                              const std::optional<ThrustWindow>& s_window) {
  if (epochs.empty()) return {};
  const double t_last = epochs.back().sec;
  const double dir = (t_last >= t0) ? 1.0 : -1.0;

  std::vector<Node> nodes;
  nodes.reserve(epochs.size() + 4);
  double prev = t0;
  for (const Epoch& e : epochs) {
    if (dir * (e.sec - prev) < 0.0) {
      throw InputError("propagate_path: output epochs must be monotone in the travel direction");
    }
    prev = e.sec;
    nodes.push_back({e.sec, true});
  }

  auto add_boundary = [&](double tb) {
    if (dir * (tb - t0) > 0.0 && dir * (t_last - tb) > 0.0) nodes.push_back({tb, false});
  };
  if (policy) {
    add_boundary(policy->burn_start.sec);
    add_boundary(policy->burn_end.sec);
  }
  if (s_window) {
    add_boundary(s_window->begin.sec);
    add_boundary(s_window->end.sec);
  }

  std::stable_sort(nodes.begin(), nodes.end(),
                   [dir](const Node& a, const Node& b) { return dir * a.t < dir * b.t; });
  // Fold non-visit boundary duplicates into their neighbors; repeated visit
  // epochs stay separate so each requested output is reported.
  std::vector<Node> merged;
  for (const Node& n : nodes) {
    if (!merged.empty() && merged.back().t == n.t && !(merged.back().visit && n.visit)) {
      merged.back().visit = merged.back().visit || n.visit;
    } else {
      merged.push_back(n);
    }
  }
  return merged;
}

// Integrates x from t to t_end, adapting dt. dt carries across segments so a
// shared node prefix yields an identical step sequence.
template <typename Stepper, typename Rhs, typename State>
void integrate_segment(Stepper& stepper, const Rhs& rhs, State& x, double& t, double t_end,
                       double& dt, double max_step, long& step_guard) {
  const double dir = (t_end >= t) ? 1.0 : -1.0;
  while (dir * (t_end - t) > 0.0) {
    if (++step_guard > 50'000'000L) {
      throw IntegrationError("propagate: step limit exceeded");
    }
    const double remaining = t_end - t;
    double dt_attempt = dt;
    bool clipped = false;
    if (dir * dt_attempt >= dir * remaining) {
      dt_attempt = remaining;
      clipped = true;
    }
    const auto result = stepper.try_step(rhs, x, t, dt_attempt);
    if (result == ode::success) {
      if (!clipped) {
        dt = dir * std::min(std::abs(dt_attempt), max_step);
      }
    } else {
      // Step rejected; dt_attempt was shrunk by the controller.
      dt = dt_attempt;
      if (std::abs(dt) < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
        throw IntegrationError("propagate: step size underflow (tolerance unreachable)");
      }
    }
  }
  t = t_end;
}

bool window_contains(double begin, double end, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double lo = std::min(begin, end);
  const double hi = std::max(begin, end);
  return lo < mid && mid < hi;
}

template <typename State, typename Rhs, typename VisitFn>
void run_nodes(State& x, double t0, const std::vector<Node>& nodes, Rhs& rhs,
               const std::optional<ManeuverPolicy>& policy,
               const std::optional<ThrustWindow>& s_window, const StepControl& ctrl,
               VisitFn&& on_visit) {
  using ErrorStepper = ode::runge_kutta_fehlberg78<State>;
  auto stepper = ode::make_controlled(ctrl.abs_tol, ctrl.rel_tol, ErrorStepper());

  double t = t0;
  const double dir = nodes.empty() || nodes.back().t >= t0 ? 1.0 : -1.0;
  double dt = dir * std::min(std::abs(ctrl.initial_step), ctrl.max_step);
  long step_guard = 0;

  for (const Node& node : nodes) {
    if (node.t != t) {
      if constexpr (requires { rhs.thrust_on; }) {
        rhs.thrust_on = policy && window_contains(policy->burn_start.sec, policy->burn_end.sec,
                                                  t, node.t);
        if (rhs.thrust_on) rhs.thrust_vvlh = policy->u_vvlh;
      }
      if constexpr (requires { rhs.forcing_on; }) {
        rhs.forcing_on = !s_window || window_contains(s_window->begin.sec, s_window->end.sec,
                                                      t, node.t);
      }
      integrate_segment(stepper, rhs, x, t, node.t, dt, ctrl.max_step, step_guard);
    }
    if (node.visit) on_visit(node.t, x);
  }
}

}  // namespace

void propagate_path(const InertialState& state, const ForceModelConfig& cfg,
                    const std::optional<ManeuverPolicy>& policy,
                    std::span<const Epoch> epochs,
                    const std::function<void(const InertialState&)>& visit,
                    const StepControl& ctrl) {
  if (epochs.empty()) return;
  const auto nodes = build_nodes(state.epoch.sec, epochs, policy, std::nullopt);

  State6 x;
  Eigen::Map<Vec3>(x.data()) = state.r;
  Eigen::Map<Vec3>(x.data() + 3) = state.v;

  TrajectoryRhs rhs{&cfg};
  run_nodes(x, state.epoch.sec, nodes, rhs, policy, std::nullopt, ctrl,
            [&](double t, const State6& xs) {
              InertialState out;
              out.epoch = Epoch{t};
              out.r = Eigen::Map<const Vec3>(xs.data());
              out.v = Eigen::Map<const Vec3>(xs.data() + 3);
              visit(out);
            });
}

InertialState propagate(const InertialState& state, const ForceModelConfig& cfg,
                        const std::optional<ManeuverPolicy>& policy, Epoch target,
                        const StepControl& ctrl) {
  InertialState out = state;
  if (target.sec == state.epoch.sec) return out;
  const Epoch epochs[1] = {target};
  propagate_path(state, cfg, policy, epochs, [&](const InertialState& s) { out = s; }, ctrl);
  return out;
}

InertialState apply_impulse(const InertialState& state, const ImpulsiveManeuver& imp) {
  if (std::abs(state.epoch - imp.epoch) > 1e-9) {
    throw InputError("apply_impulse: state epoch does not match the maneuver epoch");
  }
  InertialState out = state;
  out.v += imp.dv_eci;
  return out;
}

void propagate_variational_path(const InertialState& state, const ForceModelConfig& cfg,
                                std::span<const Epoch> epochs,
                                const std::function<void(const VariationalState&)>& visit,
                                const std::optional<ManeuverPolicy>& policy,
                                const std::optional<ThrustWindow>& s_window,
                                const StepControl& ctrl) {
  if (epochs.empty()) return;
  const auto nodes = build_nodes(state.epoch.sec, epochs, policy, s_window);

  State60 x{};
  Eigen::Map<Vec3>(x.data()) = state.r;
  Eigen::Map<Vec3>(x.data() + 3) = state.v;
  Eigen::Map<Mat6>(x.data() + 6) = Mat6::Identity();
  Eigen::Map<Mat63>(x.data() + 42) = Mat63::Zero();

  VariationalRhs rhs{&cfg};
  run_nodes(x, state.epoch.sec, nodes, rhs, policy, s_window, ctrl,
            [&](double t, const State60& xs) {
              VariationalState out;
              out.state.epoch = Epoch{t};
              out.state.r = Eigen::Map<const Vec3>(xs.data());
              out.state.v = Eigen::Map<const Vec3>(xs.data() + 3);
              out.stm = Eigen::Map<const Mat6>(xs.data() + 6);
              out.sensitivity = Eigen::Map<const Mat63>(xs.data() + 42);
              visit(out);
            });
}

VariationalState propagate_variational(const InertialState& state, const ForceModelConfig& cfg,
                                       Epoch target,
                                       const std::optional<ManeuverPolicy>& policy,
                                       const std::optional<ThrustWindow>& s_window,
                                       const StepControl& ctrl) {
  VariationalState out;
  out.state = state;
  if (target.sec == state.epoch.sec) return out;
  const Epoch epochs[1] = {target};
  propagate_variational_path(state, cfg, epochs,
                             [&](const VariationalState& s) { out = s; }, policy, s_window,
                             ctrl);
  return out;
}

Mat6 stm_between(const Mat6& phi_k_ref, const Mat6& phi_f_ref) {
  const Eigen::FullPivLU<Mat6> lu(phi_f_ref);
  if (!lu.isInvertible()) {
    throw Error("stm_between: singular state-transition matrix");
  }
  return phi_k_ref * lu.inverse();
}

Mat63 sensitivity_between(const Mat63& s_f_ref, const Mat6& phi_f_b, const Mat63& s_b_ref) {
  return s_f_ref - phi_f_b * s_b_ref;
}

}  // namespace mandet
