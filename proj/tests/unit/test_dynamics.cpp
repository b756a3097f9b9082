#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crnbp/dynamics.hpp"
#include "test_support.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

using namespace crnbp;
using crnbp::testing::laplace_model;
using crnbp::testing::random_state;
using crnbp::testing::solar_model;

namespace {

constexpr double kPi = std::numbers::pi;

// Vector-form synodic acceleration: rotating-frame terms, point-mass pulls from body
// positions built from R_j and unwrapped phases, and the barycentre acceleration summed
// over body pairs with plain vector differences.
Vec3d oracle_accel(const SystemModel& m, const State6d& s, double t) {
  const std::size_t count = m.massive_count();
  std::vector<Vec3d> p(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double psi = j < 2 ? 0.0 : m.psi0[j] + (m.n[j] - 1.0) * t;
    p[j] = Vec3d(m.R[j] * std::cos(psi) - m.mu[1], m.R[j] * std::sin(psi), 0.0);
  }
  const Vec3d rho = s.head<3>();
  const Vec3d vel = s.tail<3>();
  const Vec3d omega = Vec3d::UnitZ();
  Vec3d a = -2.0 * omega.cross(vel) - omega.cross(omega.cross(rho));
  for (std::size_t b = 0; b < 2; ++b) {
    const Vec3d d = p[b] - rho;
    a += m.mu[b] * d / std::pow(d.norm(), 3);
  }
  for (std::size_t j = 2; j < count; ++j) {
    const Vec3d d = p[j] - rho;
    Vec3d term = d / std::pow(d.norm(), 3);
    for (std::size_t k = 0; k < count; ++k) {
      if (k == j)
        continue;
      const Vec3d dk = p[k] - p[j];
      term += m.mu[k] * dk / std::pow(dk.norm(), 3);
    }
    a += m.epsilon * m.mu[j] * term;
  }
  return a;
}

// Acceleration of the M1-M2 barycentre caused by the perturbers, normalized units.
Vec3d cm12_acceleration(const SystemModel& m, double t) {
  const std::size_t count = m.massive_count();
  std::vector<Vec3d> p(count);
  for (std::size_t j = 0; j < count; ++j)
    p[j] = body_position<double>(m, j, t);
  Vec3d acc = Vec3d::Zero();
  for (std::size_t j = 2; j < count; ++j)
    for (std::size_t k = 0; k < count; ++k) {
      if (k == j)
        continue;
      const Vec3d d = p[k] - p[j];
      acc -= m.mu[j] * m.mu[k] * d / std::pow(d.norm(), 3);
    }
  return acc;
}

// Binary-case bicircular model: the third body circles the M1-M2 barycentre at distance
// a3 with phase theta0 + (n3 - 1) t.
Vec3d bcr4bp_accel(double mu, double m3, double a3, double n3, double theta0, const State6d& s,
                   double t) {
  const double x = s[0], y = s[1], z = s[2];
  const double th = theta0 + (n3 - 1.0) * t;
  const double r1 = std::sqrt((x + mu) * (x + mu) + y * y + z * z);
  const double r2 = std::sqrt((x - 1 + mu) * (x - 1 + mu) + y * y + z * z);
  const double xs = a3 * std::cos(th), ys = a3 * std::sin(th);
  const double r3 = std::sqrt((x - xs) * (x - xs) + (y - ys) * (y - ys) + z * z);
  const double c1 = (1 - mu) / std::pow(r1, 3), c2 = mu / std::pow(r2, 3), c3 = m3 / std::pow(r3, 3);
  return {2 * s[4] + x - c1 * (x + mu) - c2 * (x - 1 + mu) - c3 * (x - xs) - m3 * std::cos(th) / (a3 * a3),
          -2 * s[3] + y - c1 * y - c2 * y - c3 * (y - ys) - m3 * std::sin(th) / (a3 * a3),
          -c1 * z - c2 * z - c3 * z};
}

SystemModel four_body(double mu2, double mu3, double R3, double n3, double psi03,
                      double epsilon = 1.0) {
  SystemModel m = make_cr3bp(mu2);
  m.names.push_back("M3");
  m.mu.push_back(mu3);
  m.R.push_back(R3);
  m.n.push_back(n3);
  m.psi0.push_back(psi03);
  m.body_radii.push_back(0.0);
  m.epsilon = epsilon;
  validate(m);
  return m;
}

State6d solar_random_state(std::mt19937_64& rng, const SystemModel& m, double t) {
  return random_state(rng, 4.0, 0.8, m.massive_count(),
                      [&](std::size_t j) { return body_position<double>(m, j, t); }, 0.05);
}

} // namespace

TEST_CASE("phases_at follows the linear phase law") {
  SystemModel m = four_body(0.01, 1e-4, 0.5, 1.0, 0.3);
  CHECK(phases_at<double>(m, 123.4)[0] == doctest::Approx(0.3).epsilon(1e-12));

  m.psi0[2] = 0.0;
  m.n[2] = 2.0;
  CHECK(phases_at<double>(m, kPi)[0] == doctest::Approx(kPi).epsilon(1e-15));

  // Retrograde body: psi = -pi, represented as +pi in (-pi, pi].
  m.n[2] = -1.0;
  const double psi = phases_at<double>(m, kPi / 2)[0];
  CHECK(std::cos(psi) == doctest::Approx(std::cos(-kPi)));
  CHECK(std::abs(std::sin(psi)) < 1e-15);
  CHECK(psi > -kPi);
  CHECK(psi <= kPi);
}

TEST_CASE("epsilon = 0 reproduces the CR3BP bit for bit") {
  std::mt19937_64 rng(7);
  const SystemModel m = solar_model(rng, 0.0);
  std::uniform_real_distribution<double> time(-100.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const double t = time(rng);
    const State6d s = solar_random_state(rng, m, t);
    const Vec3d a = crnbp_accel(m, s, t);
    const Vec3d b = cr3bp_accel(m, s);
    CHECK(a == b);
    CHECK(state_jacobian(m, s, t) == state_jacobian(make_cr3bp(m.mu2()), s, t));
  }
}

TEST_CASE("crnbp_accel agrees with the vector-form oracle") {
  std::mt19937_64 rng(11);
  const SystemModel m = solar_model(rng);
  std::uniform_real_distribution<double> time(-60.0, 60.0);
  double worst = 0;
  for (int i = 0; i < 300; ++i) {
    const double t = time(rng);
    const State6d s = solar_random_state(rng, m, t);
    const Vec3d a = crnbp_accel(m, s, t);
    const Vec3d o = oracle_accel(m, s, t);
    worst = std::max(worst, (a - o).norm() / std::max(1.0, o.norm()));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("indirect double sum equals the barycentre acceleration") {
  std::mt19937_64 rng(3);
  const SystemModel m = solar_model(rng);
  for (double t : {0.0, 1.3, -17.0, 52.9}) {
    const auto ind = detail::indirect_sum(m, phases_at<double>(m, t));
    const Vec3d ref = cm12_acceleration(m, t);
    CHECK(std::abs(ind[0] - ref[0]) < 1e-14);
    CHECK(std::abs(ind[1] - ref[1]) < 1e-14);
  }
}

TEST_CASE("equal-mass L4 is an equilibrium") {
  const SystemModel m = make_cr3bp(0.5);
  State6d s = State6d::Zero();
  s[0] = 0.0;
  s[1] = std::sqrt(3.0) / 2.0;
  CHECK(cr3bp_accel(m, s).norm() < 1e-15);
  CHECK(oracle_accel(m, s, 0.0).norm() < 1e-15);
}

TEST_CASE("planar states keep zero vertical acceleration") {
  std::mt19937_64 rng(5);
  const SystemModel m = solar_model(rng);
  for (int i = 0; i < 100; ++i) {
    State6d s = solar_random_state(rng, m, 2.0);
    s[2] = 0.0;
    s[5] = 0.0;
    CHECK(crnbp_accel(m, s, 2.0)[2] == 0.0);
  }
}

TEST_CASE("cr3bp_accel structure") {
  SUBCASE("two-body limit points to M1") {
    const SystemModel m = make_cr3bp(1e-12);
    State6d s = State6d::Zero();
    s[0] = 0.7;
    // rotating-frame terms vanish for the co-rotating circular speed, so subtract them
    const Vec3d a = cr3bp_accel(m, s) - Vec3d(s[0], s[1], 0.0);
    CHECK(a[0] == doctest::Approx(-1.0 / (0.7 * 0.7)).epsilon(1e-9));
    CHECK(std::abs(a[1]) < 1e-15);
  }
  SUBCASE("pure vertical displacement off the axis") {
    const SystemModel m = make_cr3bp(0.0121);
    const auto L = lagrange_points(m);
    State6d s = L[3];
    s[2] = 0.05;
    const Vec3d a = cr3bp_accel(m, s);
    CHECK(std::abs(a[2]) > 0);
    CHECK(std::hypot(a[0], a[1]) > 0);
    State6d on = L[0];
    CHECK(std::hypot(cr3bp_accel(m, on)[0], cr3bp_accel(m, on)[1]) < 1e-12);
  }
}

TEST_CASE("analytic Jacobian matches central differences") {
  std::mt19937_64 rng(19);
  const SystemModel m = solar_model(rng);
  std::uniform_real_distribution<double> time(-50.0, 50.0);
  const double h = 1e-7;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double t = time(rng);
    const State6d s = solar_random_state(rng, m, t);
    const Mat6d J = state_jacobian(m, s, t);
    for (int c = 0; c < 6; ++c) {
      State6d sp = s, sm = s;
      sp[c] += h;
      sm[c] -= h;
      const State6d fd = (vector_field(m, sp, t) - vector_field(m, sm, t)) / (2 * h);
      for (int r = 0; r < 6; ++r)
        worst = std::max(worst, std::abs(J(r, c) - fd[r]) / std::max(1.0, std::abs(fd[r])));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Jacobian velocity block is the Coriolis coupling") {
  std::mt19937_64 rng(23);
  const SystemModel m = solar_model(rng);
  const State6d s = solar_random_state(rng, m, 0.0);
  const Mat6d J = state_jacobian(m, s, 0.0);
  Eigen::Matrix3d expect = Eigen::Matrix3d::Zero();
  expect(0, 1) = 2.0;
  expect(1, 0) = -2.0;
  CHECK(J.bottomRightCorner<3, 3>() == expect);
  CHECK(J.topRightCorner<3, 3>() == Eigen::Matrix3d::Identity());
  CHECK(J.topLeftCorner<3, 3>() == Eigen::Matrix3d::Zero());
  CHECK(std::abs(J.trace()) == 0.0);
}

TEST_CASE("Jacobi constant") {
  const SystemModel m = make_cr3bp(2.528e-5);
  const auto L = lagrange_points(m);
  const State6d l2 = L[1];
  const double J_L2 = jacobi_constant(m, l2);
  const double r1 = std::abs(l2[0] + m.mu2());
  const double r2 = std::abs(l2[0] - m.mu1());
  const double v2 = l2[0] * l2[0] + 2.0 * (m.mu1() / r1 + m.mu2() / r2) - J_L2;
  CHECK(v2 == 0.0);

  State6d s = l2;
  s.tail<3>() << 0.01, -0.02, 0.005;
  const double J1 = jacobi_constant(m, s);
  s.tail<3>() *= 2.0;
  const double J2 = jacobi_constant(m, s);
  CHECK(J1 - J2 == doctest::Approx(3.0 * 0.000525).epsilon(1e-12));
}

TEST_CASE("Lagrange points") {
  SUBCASE("residuals") {
    for (double mu : {1e-7, 2.528e-5, 9.537e-4, 0.0121, 0.3, 0.5}) {
      const SystemModel m = make_cr3bp(mu);
      for (const auto& p : lagrange_points(m))
        CHECK(cr3bp_accel(m, p).norm() < 1e-12);
    }
  }
  SUBCASE("equal masses are symmetric") {
    const SystemModel m = make_cr3bp(0.5);
    const auto L = lagrange_points(m);
    CHECK(std::abs(L[0][0]) < 1e-13);
    CHECK(L[2][0] == doctest::Approx(-L[1][0]).epsilon(1e-13));
    CHECK(L[3][0] == doctest::Approx(0.0));
    CHECK(L[3][1] == doctest::Approx(std::sqrt(3.0) / 2.0));
    CHECK(L[4][1] == doctest::Approx(-std::sqrt(3.0) / 2.0));
  }
  SUBCASE("small mass ratio pulls L1 and L2 onto M2") {
    double previous = 1.0;
    for (double mu : {1e-3, 1e-5, 1e-7, 1e-9}) {
      const SystemModel m = make_cr3bp(mu);
      const auto L = lagrange_points(m);
      const double spread = std::max(m.mu1() - L[0][0], L[1][0] - m.mu1());
      CHECK(spread < previous);
      CHECK(spread == doctest::Approx(std::cbrt(mu / 3.0)).epsilon(0.05));
      previous = spread;
    }
  }
}

TEST_CASE("binary-case bicircular limit converges as 1/R3") {
  const double mu2 = 0.01215;
  const double mu3 = 328900.0;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double errors[2] = {0, 0};
  const double radii[2] = {100.0, 1000.0};
  for (int r = 0; r < 2; ++r) {
    const double R3 = radii[r];
    const double n3 = std::sqrt((1.0 + mu3) / (R3 * R3 * R3));
    const SystemModel m = four_body(mu2, mu3, R3, n3, 0.4);
    const SystemModel cr3 = make_cr3bp(mu2);
    double worst = 0;
    std::mt19937_64 local(rng);
    for (int i = 0; i < 50; ++i) {
      State6d s;
      do {
        for (int k = 0; k < 6; ++k)
          s[k] = 1.5 * u(local);
        s[2] *= 0.2;
      } while (s.head<2>().norm() < 0.5 || (s.head<3>() - Vec3d(1 - mu2, 0, 0)).norm() < 0.05);
      const double t = 10.0 * u(local);
      const Vec3d base = cr3bp_accel(cr3, s);
      const Vec3d p_crnbp = crnbp_accel(m, s, t) - base;
      const Vec3d p_bcr = bcr4bp_accel(mu2, mu3, R3, n3, 0.4, s, t) - base;
      worst = std::max(worst, (p_crnbp - p_bcr).norm() / p_bcr.norm());
    }
    errors[r] = worst;
  }
  MESSAGE("relative error R3=100: " << errors[0] << ", R3=1000: " << errors[1]);
  CHECK(errors[0] < 0.1);
  CHECK(errors[0] / errors[1] > 7.0);
  CHECK(errors[0] / errors[1] < 14.0);
}

TEST_CASE("singularity floor raises a distinguishable error") {
  SystemModel m = make_cr3bp(0.01);
  State6d s = State6d::Zero();
  s[0] = m.mu1();
  CHECK_THROWS_AS(cr3bp_accel(m, s), SingularityError);
  CHECK_THROWS_AS(state_jacobian(m, s, 0.0), SingularityError);
  m.singularity_floor = 1e-3;
  s[0] += 5e-4;
  CHECK_THROWS_AS(cr3bp_accel(m, s), SingularityError);
}

TEST_CASE("long double instantiation agrees with double") {
  const SystemModel m = laplace_model();
  State6<long double> sl;
  sl << -1.01L, 0.02L, 0.1L, 0.0L, -0.01L, 0.3L;
  const State6d sd = sl.cast<double>();
  const Vec3<long double> al = crnbp_accel<long double>(m, sl, 0.75L);
  const Vec3d ad = crnbp_accel<double>(m, sd, 0.75);
  CHECK((al.cast<double>() - ad).norm() < 1e-14);
}
