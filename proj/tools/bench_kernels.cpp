// Serial-vs-OpenMP timings for the data-parallel kernels.
#include <benchmark/benchmark.h>

#include "mandet/correlation.hpp"
#include "mandet/detection.hpp"
#include "mandet/elements.hpp"
#include "mandet/experiments.hpp"
#include "mandet/observation.hpp"

namespace {

using namespace mandet;

struct CorrelationFixture {
  ForceModelConfig force;
  OrbitWithCovariance pre_orbit;
  OrbitWithCovariance post_orbit;
  std::vector<Epoch> grid;

  static CorrelationFixture make() {
    ForceModelConfig force;
    OrbitalElements el;
    el.a_km = 7000.0;
    el.e = 1e-3;
    el.inc_deg = 60.0;
    const InertialState pre = elements_to_state(el, force.mu, Epoch{0.0});
    el.mean_anom_deg = 0.02;
    const InertialState post = elements_to_state(el, force.mu, Epoch{0.0});
    Mat6 cov = Mat6::Identity() * 1e4;
    cov.bottomRightCorner<3, 3>() = Mat3::Identity() * 1e-2;
    return {force, OrbitWithCovariance(pre, Mat6::Zero(), force, 50.0),
            OrbitWithCovariance(post, cov, force, 0.0), make_epoch_grid(Epoch{0}, Epoch{86400}, 60.0)};
  }
};

void bm_correlation_scan(benchmark::State& state) {
  static const CorrelationFixture fx = CorrelationFixture::make();
  const ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  CorrelationGates gates;
  gates.ball_radius = 10e3;
  for (auto _ : state) {
    auto rep = correlate_orbits(fx.pre_orbit, fx.post_orbit, fx.grid, gates, mode);
    benchmark::DoNotOptimize(rep);
  }
}

void bm_observability_map(benchmark::State& state) {
  ObservabilityConfig cfg;
  cfg.direction = Vec3(0.0, 1.0, 0.0);
  cfg.grid_halfspan_s = 720.0;
  cfg.grid_step_s = 240.0;
  cfg.meas_end_s = 108000.0;  // trimmed span keeps the benchmark short
  const ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  for (auto _ : state) {
    auto grid = observability_map(cfg, mode);
    benchmark::DoNotOptimize(grid);
  }
}

void bm_detection_grid(benchmark::State& state) {
  ForceModelConfig force;
  OrbitalElements el;
  el.a_km = 6878.137;
  const InertialState pre = elements_to_state(el, force.mu, Epoch{0.0});
  const ManeuverPolicy truth{Epoch{4000.0}, Epoch{4600.0}, Vec3(1e-3, 0.0, 0.0)};
  const Ephemeris target(pre, force, truth);

  OrbitalElements obs_el;
  obs_el.a_km = 7157.0;
  obs_el.inc_deg = 20.0;
  const Ephemeris observer(elements_to_state(obs_el, force.mu, Epoch{0.0}), force);

  std::vector<TrackletWindow> windows;
  for (double start : {21600.0, 36000.0}) windows.push_back({start, 30.0});
  const auto tracklets = simulate_tracklets(windows, target, observer, 5.0 * constants::arcsec,
                                            1.0, 7);
  const auto stacked = stack_tracklets(tracklets, observer);

  SearchWindow window;
  window.t0 = Epoch{0.0};
  window.t1 = Epoch{21600.0};
  window.hint_intervals = {{Epoch{3600.0}, Epoch{5400.0}}};
  window.max_duration = 1200.0;
  DetectionGrid grid;
  grid.midpoint_step = 300.0;
  grid.duration_step = 300.0;

  const ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  for (auto _ : state) {
    auto result = detect(pre, stacked, window, grid, 1.2, force, mode);
    benchmark::DoNotOptimize(result);
  }
}

}  // namespace

BENCHMARK(bm_correlation_scan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_observability_map)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_detection_grid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
