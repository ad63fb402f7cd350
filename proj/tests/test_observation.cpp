#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mandet/observation.hpp"
#include "test_support.hpp"

using namespace mandet;

TEST_CASE("simple measurement of axis-aligned separations") {
  const AnglePair a = measure_simple(Vec3(1, 0, 0), Vec3::Zero());
  CHECK(a.alpha == 0.0);
  CHECK(a.delta == 0.0);

  // pole case: alpha falls back to the atan2(0, 0) = 0 convention
  const AnglePair p = measure_simple(Vec3(0, 0, 5), Vec3::Zero());
  CHECK(p.delta == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK(p.alpha == 0.0);

  CHECK_THROWS_AS(measure_simple(Vec3(1, 2, 3), Vec3(1, 2, 3)), DegenerateGeometryError);
}

TEST_CASE("angles invert back to the unit line of sight") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 rt(1e7 * g(rng), 1e7 * g(rng), 1e7 * g(rng));
    const Vec3 rs(7e6 * g(rng) * 0.1, 7e6 * g(rng) * 0.1, 7e6 * g(rng) * 0.1);
    if ((rt - rs).norm() < 1e3) continue;
    const AnglePair a = measure_simple(rt, rs);
    const Vec3 los(std::cos(a.delta) * std::cos(a.alpha), std::cos(a.delta) * std::sin(a.alpha),
                   std::sin(a.delta));
    CHECK((los - (rt - rs).normalized()).norm() < 1e-12);
  }
}

TEST_CASE("corrections vanish for static geometry") {
  InertialState t, o;
  t.r = Vec3(4.2e7, 1e6, 2e6);
  o.r = Vec3(7e6, -2e6, 1e5);
  const AnglePair simple = measure_simple(t.r, o.r);
  const AnglePair corrected = measure_corrected(t, o);
  CHECK(corrected.alpha == doctest::Approx(simple.alpha).epsilon(1e-15));
  CHECK(corrected.delta == doctest::Approx(simple.delta).epsilon(1e-15));
}

TEST_CASE("corrected angles match a direct corrected-LOS evaluation at GEO range") {
  InertialState t, o;
  t.r = Vec3(4.2e7, 0.0, 0.0);
  t.v = Vec3(0.0, 3.07e3, 0.0);
  o.r = Vec3(6.9e6, -1e6, 3e5);
  o.v = Vec3(1.0e3, 7.4e3, -0.5e3);

  // direct evaluation: two-pass corrected separation with its own range fix
  const double c = constants::speed_of_light;
  const Vec3 sep = t.r - o.r;
  const double rho = sep.norm();
  const double rho_t = (sep - (rho / c) * t.v).norm();
  const Vec3 q = sep - (rho / c) * t.v + (rho_t / c) * o.v;
  const Vec3 los = q.normalized();
  const double alpha_direct = std::atan2(los.y(), los.x());
  const double delta_direct = std::asin(los.z());

  const AnglePair simple = measure_simple(t.r, o.r);
  const AnglePair corr = measure_corrected(t, o);
  const double shift = std::hypot(corr.alpha - simple.alpha, corr.delta - simple.delta);
  CHECK(shift > 1e-6);  // the correction is not negligible here
  CHECK(std::abs(corr.alpha - alpha_direct) < 0.01 * shift);
  CHECK(std::abs(corr.delta - delta_direct) < 0.01 * shift);
}

TEST_CASE("flipping both velocities flips the angular correction to first order") {
  InertialState t, o;
  t.r = Vec3(4.2e7, 5e6, -2e6);
  t.v = Vec3(-0.4e3, 3.0e3, 0.1e3);
  o.r = Vec3(6.9e6, 0.0, 1e6);
  o.v = Vec3(0.0, 7.5e3, 0.5e3);
  const AnglePair simple = measure_simple(t.r, o.r);
  const AnglePair plus = measure_corrected(t, o);
  InertialState tm = t, om = o;
  tm.v = -t.v;
  om.v = -o.v;
  const AnglePair minus = measure_corrected(tm, om);
  const double da_plus = plus.alpha - simple.alpha;
  const double da_minus = minus.alpha - simple.alpha;
  CHECK(std::abs(da_plus + da_minus) < 0.01 * std::abs(da_plus));
  const double dd_plus = plus.delta - simple.delta;
  const double dd_minus = minus.delta - simple.delta;
  CHECK(std::abs(dd_plus + dd_minus) < 0.01 * std::abs(dd_plus));
}

TEST_CASE("corrected model approaches the simple model as light speed grows") {
  InertialState t, o;
  t.r = Vec3(4.2e7, 5e6, -2e6);
  t.v = Vec3(-0.4e3, 3.0e3, 0.1e3);
  o.r = Vec3(6.9e6, 0.0, 1e6);
  o.v = Vec3(0.0, 7.5e3, 0.5e3);
  const AnglePair simple = measure_simple(t.r, o.r);
  const AnglePair fast_light = measure_corrected(t, o, constants::speed_of_light * 1e6);
  CHECK(std::abs(fast_light.alpha - simple.alpha) < 1e-12);
  CHECK(std::abs(fast_light.delta - simple.delta) < 1e-12);
}

TEST_CASE("measurement partials") {
  InertialState t, o;
  t.r = Vec3(1.2e7, -3e6, 4e6);
  t.v = Vec3(1e3, 2e3, -0.5e3);
  o.r = Vec3(6.9e6, 1e6, -2e6);
  o.v = Vec3(-0.3e3, 7.2e3, 1e3);
  const MeasurementPartials p = measurement_partials(t, o);

  SUBCASE("velocity block is the light-time scaling of the position block") {
    const double rho = (t.r - o.r).norm();
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (p.wrt_position(i, j) == 0.0) {
          CHECK(p.wrt_velocity(i, j) == 0.0);
        } else {
          CHECK(p.wrt_velocity(i, j) / p.wrt_position(i, j) ==
                doctest::Approx(rho / constants::speed_of_light).epsilon(1e-12));
        }
      }
    }
  }

  SUBCASE("alpha is insensitive to target z") { CHECK(p.wrt_position(0, 2) == 0.0); }

  SUBCASE("position block matches finite differences of the simple model") {
    const double eps = 1.0;
    for (int j = 0; j < 3; ++j) {
      Vec3 rp = t.r, rm = t.r;
      rp[j] += eps;
      rm[j] -= eps;
      const AnglePair ap = measure_simple(rp, o.r);
      const AnglePair am = measure_simple(rm, o.r);
      CHECK(p.wrt_position(0, j) ==
            doctest::Approx((ap.alpha - am.alpha) / (2 * eps)).epsilon(1e-6));
      CHECK(p.wrt_position(1, j) ==
            doctest::Approx((ap.delta - am.delta) / (2 * eps)).epsilon(1e-6));
    }
  }

  SUBCASE("velocity block matches finite differences of the corrected model") {
    const double eps = 1.0e-1;
    for (int j = 0; j < 3; ++j) {
      InertialState tp = t, tm = t;
      tp.v[j] += eps;
      tm.v[j] -= eps;
      const AnglePair ap = measure_corrected(tp, o);
      const AnglePair am = measure_corrected(tm, o);
      const double fd_a = (ap.alpha - am.alpha) / (2 * eps);
      const double fd_d = (ap.delta - am.delta) / (2 * eps);
      CHECK(std::abs(p.wrt_velocity(0, j) - fd_a) <=
            1e-4 * std::max(std::abs(fd_a), 1e-12));
      CHECK(std::abs(p.wrt_velocity(1, j) - fd_d) <=
            1e-4 * std::max(std::abs(fd_d), 1e-12));
    }
  }

  SUBCASE("pole geometry is rejected") {
    InertialState tp = t;
    tp.r = o.r + Vec3(0.0, 0.0, 1e6);
    CHECK_THROWS_AS(measurement_partials(tp, o), DegenerateGeometryError);
  }
}

TEST_CASE("tracklet simulation") {
  auto geo = fixtures::TwoOrbitGeometry::make();
  const Ephemeris target(geo.target, geo.force);

  SUBCASE("zero sigma reproduces the corrected model exactly") {
    const std::vector<TrackletWindow> win = {{1000.0, 30.0}};
    const auto trks = simulate_tracklets(win, target, geo.observer, 0.0, 1.0, 42);
    REQUIRE(trks.size() == 1);
    CHECK(trks[0].measurements.size() == 31);
    for (const auto& m : trks[0].measurements) {
      const AnglePair truth =
          measure_corrected(target.at(m.epoch), geo.observer.at(m.epoch));
      CHECK(m.alpha == truth.alpha);
      CHECK(m.delta == truth.delta);
    }
  }

  SUBCASE("noise statistics match the requested sigma") {
    const double sigma = 5.0 * constants::arcsec;
    const std::vector<TrackletWindow> win = {{0.0, 9999.0}};
    const auto trks = simulate_tracklets(win, target, geo.observer, sigma, 1.0, 7);
    const auto& ms = trks[0].measurements;
    REQUIRE(ms.size() == 10000);
    double s2a = 0.0, s2d = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const AnglePair truth =
          measure_corrected(target.at(ms[k].epoch), geo.observer.at(ms[k].epoch));
      const double na = wrap_angle(ms[k].alpha - truth.alpha);
      const double nd = ms[k].delta - truth.delta;
      s2a += na * na;
      s2d += nd * nd;
      cross += na * nd;
    }
    const double std_a = std::sqrt(s2a / ms.size());
    const double std_d = std::sqrt(s2d / ms.size());
    CHECK(std::abs(std_a / sigma - 1.0) < 0.03);
    CHECK(std::abs(std_d / sigma - 1.0) < 0.03);
    const double corr = cross / std::sqrt(s2a * s2d);
    CHECK(std::abs(corr) < 0.05);
  }

  SUBCASE("seed change keeps epochs and changes the noise") {
    const std::vector<TrackletWindow> win = {{500.0, 20.0}, {4000.0, 20.0}};
    const double sigma = 5.0 * constants::arcsec;
    const auto a = simulate_tracklets(win, target, geo.observer, sigma, 1.0, 1);
    const auto b = simulate_tracklets(win, target, geo.observer, sigma, 1.0, 2);
    REQUIRE(a.size() == b.size());
    bool any_diff = false;
    for (std::size_t w = 0; w < a.size(); ++w) {
      for (std::size_t k = 0; k < a[w].measurements.size(); ++k) {
        CHECK(a[w].measurements[k].epoch == b[w].measurements[k].epoch);
        any_diff |= a[w].measurements[k].alpha != b[w].measurements[k].alpha;
      }
    }
    CHECK(any_diff);
  }

  SUBCASE("overlapping windows are rejected") {
    const std::vector<TrackletWindow> bad = {{0.0, 100.0}, {50.0, 30.0}};
    CHECK_THROWS_AS(simulate_tracklets(bad, target, geo.observer, 0.0, 1.0, 1), InputError);
  }
}
