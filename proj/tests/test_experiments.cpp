#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "mandet/experiments.hpp"

using namespace mandet;

TEST_CASE("divergence study reproduces the 600-s in-track separation") {
  DivergenceConfig cfg;
  cfg.durations = {60.0, 600.0};
  const auto rows = divergence_study(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean_diff_m < 1.0);  // minute-long burns are impulse-like
  CHECK(rows[1].mean_diff_m == doctest::Approx(30.6).epsilon(0.05));
}

TEST_CASE("divergence scales nearly linearly with the thrust magnitude") {
  DivergenceConfig weak;
  weak.durations = {600.0};
  DivergenceConfig strong = weak;
  strong.u_mag = 1e-2;
  const double d_weak = divergence_study(weak)[0].mean_diff_m;
  const double d_strong = divergence_study(strong)[0].mean_diff_m;
  CHECK(d_strong / d_weak > 9.0);
  CHECK(d_strong / d_weak < 11.0);
}

TEST_CASE("divergence is direction-sensitive at fixed duration") {
  DivergenceConfig cfg;
  cfg.durations = {600.0};
  cfg.direction = Vec3(0.0, 0.0, 1.0);  // radial
  const double radial = divergence_study(cfg)[0].mean_diff_m;
  cfg.direction = Vec3(0.0, 1.0, 0.0);  // normal
  const double normal = divergence_study(cfg)[0].mean_diff_m;
  CHECK(radial == doctest::Approx(15.2).epsilon(0.05));
  CHECK(normal == doctest::Approx(7.6).epsilon(0.05));
}

TEST_CASE("divergence rows serialize with a header") {
  std::ostringstream os;
  write_divergence_csv(os, {{300.0, 3.9}});
  CHECK(os.str() == "duration_s,mean_diff_m\n300,3.9\n");
}

TEST_CASE("observability map on a trimmed grid") {
  ObservabilityConfig cfg;
  cfg.direction = Vec3(0.0, 1.0, 0.0);
  cfg.grid_halfspan_s = 720.0;
  cfg.grid_step_s = 240.0;
  cfg.meas_end_s = 115200.0;  // 8 h of virtual positions keeps the test quick
  const ObservabilityGrid grid = observability_map(cfg);

  SUBCASE("every evaluated cell has an open window") {
    for (Eigen::Index i = 0; i < grid.rms.rows(); ++i) {
      for (Eigen::Index j = 0; j < grid.rms.cols(); ++j) {
        if (grid.valid(i, j)) CHECK(grid.tb_axis[i] < grid.tf_axis[j]);
      }
    }
  }

  SUBCASE("the truth cell is the global minimum") {
    Eigen::Index bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < grid.rms.rows(); ++i) {
      for (Eigen::Index j = 0; j < grid.rms.cols(); ++j) {
        if (grid.valid(i, j) && grid.rms(i, j) < best) {
          best = grid.rms(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    REQUIRE(bi >= 0);
    CHECK(grid.tb_axis[bi] == doctest::Approx(grid.truth_tb));
    CHECK(grid.tf_axis[bj] == doctest::Approx(grid.truth_tf));
    CHECK(best < 1.0);
  }

  SUBCASE("the CSV omits masked cells") {
    std::ostringstream os;
    write_observability_csv(os, grid);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "tb_offset_s,tf_offset_s,rms_m");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    int valid = 0;
    for (Eigen::Index i = 0; i < grid.rms.rows(); ++i) {
      for (Eigen::Index j = 0; j < grid.rms.cols(); ++j) valid += grid.valid(i, j) ? 1 : 0;
    }
    CHECK(rows == valid);
  }
}

TEST_CASE("serial and parallel divergence agree bitwise") {
  DivergenceConfig cfg;
  cfg.durations = {300.0, 600.0};
  const auto a = divergence_study(cfg, ExecMode::Serial);
  const auto b = divergence_study(cfg, ExecMode::Parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].mean_diff_m == b[i].mean_diff_m);
}
