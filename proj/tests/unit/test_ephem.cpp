#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crnbp/ephem.hpp"
#include "test_support.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace crnbp;
using crnbp::testing::data_path;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

MeanElements random_elements(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {0.98 * kPi * u(rng) + 0.01, 2 * kPi * u(rng) - kPi, 2 * kPi * u(rng) - kPi};
}

Vec3d random_vector(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

// Independent construction of the triad: rotate the reference axes by the 3-1-3
// Euler sequence (raan, inclination, argument of periapsis).
Mat3d euler_313(const MeanElements& el) {
  return (Eigen::AngleAxisd(el.raan, Vec3d::UnitZ()) *
          Eigen::AngleAxisd(el.inclination, Vec3d::UnitX()) *
          Eigen::AngleAxisd(el.arg_periapsis, Vec3d::UnitZ()))
      .toRotationMatrix();
}

double orthonormality_residual(const Mat3d& m) {
  return (m * m.transpose() - Mat3d::Identity()).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("orbit_frame") {
  SUBCASE("identity orientation") {
    const OrbitFrame f = orbit_frame({0, 0, 0});
    CHECK(f.h2_hat == Vec3d(0, 0, 1));
    CHECK(f.e2_hat == Vec3d(1, 0, 0));
    CHECK(f.e2perp_hat == Vec3d(0, 1, 0));
  }
  SUBCASE("polar orbit") {
    const OrbitFrame f = orbit_frame({90 * kDeg, 0, 0});
    CHECK((f.h2_hat - Vec3d(0, -1, 0)).norm() < 1e-15);
  }
  SUBCASE("random elements match an Euler-angle construction") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      const MeanElements el = random_elements(rng);
      const OrbitFrame f = orbit_frame(el);
      Mat3d triad;
      triad << f.e2_hat, f.e2perp_hat, f.h2_hat;
      CHECK(orthonormality_residual(triad) < 1e-14);
      CHECK(triad.determinant() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK((triad - euler_313(el)).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(f.e2perp_hat == f.h2_hat.cross(f.e2_hat));
    }
  }
}

TEST_CASE("project_to_plane") {
  std::mt19937_64 rng(4);
  const OrbitFrame f = orbit_frame(random_elements(rng));
  CHECK(project_to_plane(f, 3.0 * f.h2_hat).norm() < 1e-15);
  const Vec3d in = 0.3 * f.e2_hat - 0.7 * f.e2perp_hat;
  CHECK((project_to_plane(f, in) - in).norm() < 1e-15);
  for (int i = 0; i < 100; ++i) {
    const Vec3d s = random_vector(rng, 1.0);
    const Vec3d p = project_to_plane(f, s);
    CHECK(std::abs(p.dot(f.h2_hat)) < 1e-15);
    CHECK((project_to_plane(f, p) - p).norm() < 1e-15);
  }
}

TEST_CASE("initial_phase") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    MeanElements el = random_elements(rng);
    const OrbitFrame f = orbit_frame(el);
    const Vec3d s12 = random_vector(rng, 5.0);
    CHECK(initial_phase(f, s12, s12) == 0.0);
    std::uniform_real_distribution<double> ang(-kPi + 1e-6, kPi);
    const double a = ang(rng);
    // Phases are measured about h2, the synodic z axis, whatever its tilt.
    const Vec3d sj = 2.5 * (Eigen::AngleAxisd(a, f.h2_hat) * s12) + 0.4 * f.h2_hat;
    CHECK(initial_phase(f, s12, sj) == doctest::Approx(a).epsilon(1e-11));
  }
  const OrbitFrame f = orbit_frame({0.1, 0.2, 0.3});
  const Vec3d s12(1.0, 0.2, 0.0);
  const Vec3d q = Eigen::AngleAxisd(kPi / 2, f.h2_hat) * s12;
  CHECK(initial_phase(f, s12, q) == doctest::Approx(kPi / 2).epsilon(1e-14));
  const Vec3d r = Eigen::AngleAxisd(-kPi / 2, f.h2_hat) * s12;
  CHECK(initial_phase(f, s12, r) == doctest::Approx(-kPi / 2).epsilon(1e-14));
  CHECK_THROWS_AS(initial_phase(f, s12, f.h2_hat), std::invalid_argument);
}

TEST_CASE("rotation matrices") {
  std::mt19937_64 rng(8);
  CHECK(s_matrix(orbit_frame({0, 0, 0}), Vec3d(4.2, 0, 0)) == Mat3d::Identity());
  for (int i = 0; i < 100; ++i) {
    const OrbitFrame f = orbit_frame(random_elements(rng));
    const Vec3d s12 = random_vector(rng, 3.0);
    const Mat3d S = s_matrix(f, s12);
    CHECK(orthonormality_residual(S) < 1e-13);
    CHECK(S.determinant() == doctest::Approx(1.0).epsilon(1e-13));
    const Vec3d along = S * project_to_plane(f, s12);
    CHECK(along.x() > 0);
    CHECK(std::hypot(along.y(), along.z()) < 1e-14 * along.norm());
  }
  CHECK(t_matrix(0.0) == Mat3d::Identity());
  CHECK((t_matrix(2 * kPi) - Mat3d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((t_matrix(0.3) * t_matrix(1.9) - t_matrix(2.2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(t_matrix(kPi / 2)(0, 1) == doctest::Approx(1.0));
  const double h = 1e-6;
  const Mat3d fd = (t_matrix(0.8 + h) - t_matrix(0.8 - h)) / (2 * h);
  CHECK((fd - t_dot_matrix(0.8)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fixed and synodic states") {
  const double mu2 = 0.0123;
  SUBCASE("identity rotations subtract the barycentre offset") {
    const Vec3d s(0.4, -0.2, 0.1), v(0.01, 0.02, 0.03);
    const State6d x = fixed_to_synodic(Mat3d::Identity(), mu2, 0.0, s, v);
    CHECK((x.head<3>() - (s - mu2 * Vec3d::UnitX())).norm() < 1e-16);
  }
  SUBCASE("M2's idealized location is a fixed point") {
    std::mt19937_64 rng(12);
    const OrbitFrame f = orbit_frame(random_elements(rng));
    const Mat3d S = s_matrix(f, random_vector(rng, 1.0));
    for (double t : {0.0, 0.7, -3.1}) {
      const Mat3d T = t_matrix(t);
      const Vec3d s = S.transpose() * T.transpose() * Vec3d::UnitX();
      const Vec3d v = -S.transpose() * T.transpose() * t_dot_matrix(t) * T.transpose() * Vec3d::UnitX();
      const State6d x = fixed_to_synodic(S, mu2, t, s, v);
      CHECK((x.head<3>() - Vec3d(1 - mu2, 0, 0)).norm() < 1e-14);
      CHECK(x.tail<3>().norm() < 1e-14);
    }
  }
  SUBCASE("a body fixed in the inertial frame appears to rotate clockwise") {
    const State6d x = fixed_to_synodic(Mat3d::Identity(), 0.0, kPi / 2, Vec3d(1, 0, 0), Vec3d::Zero());
    CHECK((x.head<3>() - Vec3d(0, -1, 0)).norm() < 1e-15);
    // v = -omega x rho
    CHECK((x.tail<3>() - Vec3d(-1, 0, 0)).norm() < 1e-15);
  }
  SUBCASE("round trip") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 100; ++i) {
      const OrbitFrame f = orbit_frame(random_elements(rng));
      const Mat3d S = s_matrix(f, random_vector(rng, 1.0));
      State6d x;
      x << random_vector(rng, 2.0), random_vector(rng, 0.5);
      const double t = 20.0 * (i - 50) / 50.0;
      const State6d back = fixed_to_synodic(S, mu2, t, synodic_to_fixed(S, mu2, t, x).head<3>(),
                                            synodic_to_fixed(S, mu2, t, x).tail<3>());
      CHECK((back - x).norm() < 1e-12);
    }
  }
}

TEST_CASE("t_n_from_jd") {
  CHECK(t_n_from_jd(2456200.5, 2456200.5, 1e-6) == 0.0);
  CHECK(t_n_from_jd(2456201.5, 2456200.5, 1.0 / 86400.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double period_days = 3.551181;
  const double n = 2 * kPi / (period_days * 86400.0);
  CHECK(std::abs(t_n_from_jd(period_days, 0.0, n) - 2 * kPi) < 1e-12);
}

TEST_CASE("ephemeris tables") {
  SUBCASE("parse") {
    std::istringstream in("# c\n2450000.5 Io 1 2 3 4 5 6\n\n2450000.5 Europa 1 0 0 0 1 0 # x\n");
    const auto t = parse_ephemeris_table(in, "mem");
    REQUIRE(t.size() == 2);
    CHECK(t[0].s_1j == Vec3d(1, 2, 3));
    CHECK(t[0].v_1j == Vec3d(4, 5, 6));
    CHECK(find_record(t, "Europa", 2450000.5).body == "Europa");
    CHECK_THROWS_AS(find_record(t, "Europa", 2450001.5), ConfigError);
    std::istringstream bad("2450000.5 Io 1 2 3\n");
    CHECK_THROWS_AS(parse_ephemeris_table(bad, "bad"), ConfigError);
  }
  SUBCASE("shipped solar table round trip") {
    const auto table = load_ephemeris_table(data_path("ephem/solar_2012-09-30.tbl"));
    const double jd0 = 2456200.5;
    const auto& jup = find_record(table, "Jupiter", jd0);
    const OrbitFrame f = orbit_frame({1.30439695 * kDeg, -85.74542926 * kDeg, 100.47390909 * kDeg});
    const Mat3d S = s_matrix(f, jup.s_1j);
    const double L = 778340816.7, Tu = 374335689.6 / (2 * kPi);
    const double mu2 = 9.5388e-4;
    CHECK(initial_phase(f, jup.s_1j, jup.s_1j) == 0.0);
    for (const auto& rec : table) {
      const double t = t_n_from_jd(rec.jd, jd0, 1.0 / Tu);
      const Vec3d s = rec.s_1j / L, v = rec.v_1j * Tu / L;
      const State6d syn = fixed_to_synodic(S, mu2, t, s, v);
      const State6d back = synodic_to_fixed(S, mu2, t, syn);
      CHECK((back.head<3>() - s).norm() < 1e-10 * s.norm());
      CHECK((project_to_plane(f, back.head<3>()) - project_to_plane(f, s)).norm() < 1e-10 * s.norm());
      CHECK((back.tail<3>() - v).norm() < 1e-10 * std::max(1.0, v.norm()));
    }
    // Jupiter's actual orbit is nearly circular: the synodic image sits near (mu1, 0, 0).
    const State6d xj = fixed_to_synodic(S, mu2, 0.0, jup.s_1j / L, jup.v_1j * Tu / L);
    CHECK(std::abs(xj[1]) < 1e-12);
    CHECK(std::abs(xj[0] - (1 - mu2)) < 0.06);
  }
}
