#include "mandet/correlation.hpp"

#include <algorithm>
#include <cmath>

namespace mandet {

namespace {

Mat3 combined_covariance(const PositionWithCovariance& a, const PositionWithCovariance& b) {
  if (std::abs(a.epoch - b.epoch) > 1e-9) {
    throw InputError("mahalanobis: positions are not at the same epoch");
  }
  return a.cov + b.cov;
}

}  // namespace

double mahalanobis(const PositionWithCovariance& a, const PositionWithCovariance& b) {
  const Mat3 p = combined_covariance(a, b);
  const Eigen::LLT<Mat3> llt(p);
  if (llt.info() != Eigen::Success) {
    throw Error("mahalanobis: combined covariance is not positive definite");
  }
  const Vec3 d = b.r - a.r;
  return std::sqrt(d.dot(llt.solve(d)));
}

double mahalanobis_relaxed(const PositionWithCovariance& a, const PositionWithCovariance& b,
                           double ball_radius) {
  if (ball_radius < 0.0) throw InputError("mahalanobis_relaxed: negative ball radius");
  if (ball_radius == 0.0) return mahalanobis(a, b);

  const Vec3 diff = b.r - a.r;
  if (diff.norm() <= ball_radius) return 0.0;

  const Mat3 p = combined_covariance(a, b);
  const Eigen::SelfAdjointEigenSolver<Mat3> es(p);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw Error("mahalanobis_relaxed: combined covariance is not positive definite");
  }
  const Vec3 lambda = es.eigenvalues();
  const Vec3 proj = es.eigenvectors().transpose() * diff;  // a_i in the eigenbasis
  const double d2 = ball_radius * ball_radius;

  // g(xi) = sum a_i^2 / (1 + xi*lambda_i)^2 - d^2 is strictly decreasing on
  // xi >= 0 with g(0) > 0, so it has exactly one positive root.
  const auto g = [&](double xi) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double den = 1.0 + xi * lambda[i];
      s += proj[i] * proj[i] / (den * den);
    }
    return s - d2;
  };

  double lo = 0.0;
  double hi = 1.0 / lambda.maxCoeff();
  int doublings = 0;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 600) {
      throw Error("mahalanobis_relaxed: failed to bracket the multiplier (g(" +
                  std::to_string(hi) + ") still positive)");
    }
  }

  const double tol = 1e-12 * d2;
  double xi = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    xi = 0.5 * (lo + hi);
    const double val = g(xi);
    if (std::abs(val) <= tol || (hi - lo) <= 1e-15 * std::max(1.0, hi)) break;
    (val > 0.0 ? lo : hi) = xi;
  }

  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double bi = proj[i] / (1.0 + xi * lambda[i]);
    chi2 += (proj[i] - bi) * (proj[i] - bi) / lambda[i];
  }
  return std::sqrt(chi2);
}

OrbitWithCovariance::OrbitWithCovariance(InertialState anchor, Mat6 covariance,
                                         ForceModelConfig cfg, double floor_sigma_m,
                                         StepControl ctrl)
    : anchor_(anchor), covariance_(covariance), cfg_(cfg), floor_sigma_m_(floor_sigma_m),
      ctrl_(ctrl) {}

std::vector<PositionWithCovariance> OrbitWithCovariance::sample(
    std::span<const Epoch> epochs) const {
  std::vector<PositionWithCovariance> out(epochs.size());
  const Mat3 floor = floor_sigma_m_ * floor_sigma_m_ * Mat3::Identity();

  std::vector<Epoch> backward, forward;
  std::vector<std::size_t> b_idx, f_idx;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i] < anchor_.epoch) {
      backward.push_back(epochs[i]);
      b_idx.push_back(i);
    } else {
      forward.push_back(epochs[i]);
      f_idx.push_back(i);
    }
  }
  std::reverse(backward.begin(), backward.end());
  std::reverse(b_idx.begin(), b_idx.end());

  const auto emit = [&](std::size_t slot, const VariationalState& vs) {
    PositionWithCovariance p;
    p.epoch = vs.state.epoch;
    p.r = vs.state.r;
    const Mat6 mapped = vs.stm * covariance_ * vs.stm.transpose();
    p.cov = mapped.topLeftCorner<3, 3>();
    p.cov = (0.5 * (p.cov + p.cov.transpose()) + floor).eval();
    out[slot] = p;
  };

  std::size_t k = 0;
  if (!forward.empty()) {
    propagate_variational_path(anchor_, cfg_, forward,
                               [&](const VariationalState& vs) { emit(f_idx[k++], vs); },
                               std::nullopt, std::nullopt, ctrl_);
  }
  k = 0;
  if (!backward.empty()) {
    propagate_variational_path(anchor_, cfg_, backward,
                               [&](const VariationalState& vs) { emit(b_idx[k++], vs); },
                               std::nullopt, std::nullopt, ctrl_);
  }
  return out;
}

CorrelationReport correlate_orbits(const OrbitWithCovariance& orbit1,
                                   const OrbitWithCovariance& orbit2,
                                   std::span<const Epoch> grid, const CorrelationGates& gates,
                                   ExecMode exec) {
  CorrelationReport rep;
  rep.gates = gates;
  rep.epochs.assign(grid.begin(), grid.end());
  rep.chi_strict.assign(grid.size(), 0.0);
  if (gates.ball_radius) rep.chi_relaxed.assign(grid.size(), 0.0);

  const auto p1 = orbit1.sample(grid);
  const auto p2 = orbit2.sample(grid);

  parallel_for(exec, static_cast<std::ptrdiff_t>(grid.size()), [&](std::ptrdiff_t i) {
    rep.chi_strict[i] = mahalanobis(p1[i], p2[i]);
    if (gates.ball_radius) {
      rep.chi_relaxed[i] = mahalanobis_relaxed(p1[i], p2[i], *gates.ball_radius);
    }
  });

  const auto below_gate = [&](const std::vector<double>& chi) {
    return std::any_of(chi.begin(), chi.end(),
                       [&](double c) { return c <= gates.chi_max; });
  };
  rep.correlated_strict = below_gate(rep.chi_strict);
  rep.correlated_relaxed = gates.ball_radius ? below_gate(rep.chi_relaxed) : false;
  return rep;
}

std::vector<Epoch> make_epoch_grid(Epoch t0, Epoch t1, double step_s) {
  if (step_s <= 0.0 || t1 < t0) throw InputError("make_epoch_grid: bad grid request");
  std::vector<Epoch> grid;
  for (double t = t0.sec; t <= t1.sec + 1e-9; t += step_s) grid.push_back(Epoch{t});
  return grid;
}

}  // namespace mandet
