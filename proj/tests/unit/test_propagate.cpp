#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crnbp/propagate.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace crnbp;

namespace {

constexpr double kPi = std::numbers::pi;

IntegratorSettings tight() { return {}; }

IntegratorSettings with_tol(double tol) {
  IntegratorSettings s;
  s.rel_tol = s.abs_tol = tol;
  return s;
}

// A bounded prograde orbit around M1 inside M2's orbit.
State6d inner_orbit(double mu2) {
  State6d s;
  const double r = 0.45;
  s << r - mu2, 0.0, 0.02, 0.0, std::sqrt((1 - mu2) / r) - r, 0.01;
  return s;
}

} // namespace

TEST_CASE("harmonic oscillator through the raw stepper") {
  // y'' = -y has the exact solution cos t; exercises both directions and dense output.
  using V2 = Eigen::Matrix<double, 2, 1>;
  auto rhs = [](double, const V2& y) -> V2 { return {y[1], -y[0]}; };
  for (double t1 : {10.0, -10.0}) {
    Dop853<2, decltype(rhs)> st(rhs, 0.0, V2(1.0, 0.0), t1, {1e-12, 1e-12});
    double worst_dense = 0;
    while (!st.finished()) {
      st.step();
      const double tm = 0.5 * (st.t() + st.t_old());
      worst_dense = std::max(worst_dense, std::abs(st.dense(tm)[0] - std::cos(tm)));
    }
    CHECK(st.t() == t1);
    CHECK(std::abs(st.y()[0] - std::cos(t1)) < 1e-10);
    CHECK(std::abs(st.y()[1] + std::sin(t1)) < 1e-10);
    CHECK(worst_dense < 1e-10);
  }
}

TEST_CASE("settings validation") {
  const SystemModel m = make_cr3bp(0.01);
  State6d s = inner_orbit(0.01);
  CHECK_THROWS_AS(integrate(m, s, 0, 1, with_tol(1e-16)), std::invalid_argument);
  CHECK_THROWS_AS(integrate(m, s, 0, 1, with_tol(1e-2)), std::invalid_argument);
  CHECK_THROWS_AS(integrate(m, s, 0, 0, tight()), std::invalid_argument);
  IntegratorSettings back = tight();
  back.direction = Direction::backward;
  CHECK_THROWS_AS(integrate(m, s, 0, 1, back), std::invalid_argument);
  CHECK_NOTHROW(integrate(m, s, 0, -1, back));
  State6d bad = s;
  bad[3] = std::nan("");
  CHECK_THROWS_AS(integrate(m, bad, 0, 1, tight()), std::invalid_argument);
  IntegratorSettings few = tight();
  few.max_steps = 3;
  CHECK_THROWS_AS(integrate(m, s, 0, 100, few), MaxStepsExceeded);
}

TEST_CASE("L4 equilibrium persists") {
  const SystemModel m = make_cr3bp(0.0121);
  const State6d l4 = lagrange_points(m)[3];
  const Trajectory tr = integrate(m, l4, 0.0, 10.0, tight());
  CHECK((tr.final_state() - l4).norm() < 1e-6);
  CHECK(tr.final_time() == 10.0);
}

TEST_CASE("planar states stay planar") {
  std::mt19937_64 rng(1);
  const SystemModel m = testing::solar_model(rng);
  State6d s = inner_orbit(m.mu2());
  s[2] = s[5] = 0.0;
  const Trajectory tr = integrate(m, s, 0.0, 20.0, tight());
  for (const auto& x : tr.states) {
    CHECK(x[2] == 0.0);
    CHECK(x[5] == 0.0);
  }
}

TEST_CASE("backward then forward recovers the start") {
  const SystemModel m = testing::laplace_model();
  State6d s;
  s << -1.2, 0.3, 0.05, 0.1, -0.05, 0.02;
  const Trajectory back = integrate(m, s, 3.0, -4.0, tight());
  const Trajectory fwd = integrate(m, back.final_state(), -4.0, 3.0, tight());
  CHECK((fwd.final_state() - s).norm() < 1e-8);
}

TEST_CASE("Jacobi constant is conserved in the CR3BP") {
  const SystemModel m = make_cr3bp(2.528e-5);
  const State6d s = inner_orbit(m.mu2());
  const Trajectory tr = integrate(m, s, 0.0, 100.0, tight());
  const double j0 = jacobi_constant(m, s);
  double drift = 0;
  for (const auto& x : tr.states)
    drift = std::max(drift, std::abs(jacobi_constant(m, x) - j0));
  MESSAGE("Jacobi drift " << drift);
  CHECK(drift < 1e-10);
}

TEST_CASE("endpoint error shrinks as tolerances are halved") {
  const SystemModel m = make_cr3bp(9.537e-4);
  const State6d s = inner_orbit(m.mu2());
  const State6d ref = integrate(m, s, 0.0, 10.0, with_tol(1e-15)).final_state();
  std::vector<double> errors;
  for (double tol = 1e-6; tol >= 1e-9 * 0.99; tol *= 0.1)
    errors.push_back((integrate(m, s, 0.0, 10.0, with_tol(tol)).final_state() - ref).norm());
  for (std::size_t i = 1; i < errors.size(); ++i)
    CHECK(errors[i] < errors[i - 1]);
  // Halving over the same three decades: allow at most an occasional plateau.
  int increases = 0;
  double previous = std::numeric_limits<double>::infinity();
  for (double tol = 1e-6; tol >= 1e-9; tol *= 0.5) {
    const double e = (integrate(m, s, 0.0, 10.0, with_tol(tol)).final_state() - ref).norm();
    if (e >= previous)
      ++increases;
    previous = e;
  }
  CHECK(increases == 0);
}

TEST_CASE("sampling options") {
  const SystemModel m = make_cr3bp(0.01);
  const State6d s = inner_orbit(0.01);
  IntegratorSettings grid = tight();
  grid.sample_dt = 0.25;
  const Trajectory g = integrate(m, s, 0.0, -5.0, grid);
  REQUIRE(g.t.size() == 21);
  CHECK(g.t[4] == -1.0);
  const Trajectory full = integrate(m, s, 0.0, -5.0, tight());
  IntegratorSettings strided = tight();
  strided.stride = 3;
  const Trajectory d = integrate(m, s, 0.0, -5.0, strided);
  CHECK(d.t.size() < full.t.size());
  CHECK(d.final_time() == -5.0);
  CHECK((d.final_state() - full.final_state()).norm() == 0.0);

  std::ostringstream csv;
  write_trajectory_csv(csv, g);
  CHECK(csv.str().rfind("t,x,y,z,vx,vy,vz\n", 0) == 0);
}

TEST_CASE("events") {
  const double mu2 = 0.0121;
  SystemModel m = make_cr3bp(mu2);
  m.body_radii = {0.0, 0.01};
  State6d s;
  s << 1 - mu2, 0.0, 0.1, 0.0, 0.0, 0.0; // falls onto M2 from above
  SUBCASE("terminal collision located on the sphere") {
    const Trajectory tr = integrate(m, s, 0.0, 5.0, tight(), collision_events(m));
    REQUIRE(tr.terminated);
    REQUIRE(tr.events.size() == 1);
    const EventRecord& ev = tr.events.front();
    CHECK(ev.event == 0);
    CHECK(std::abs((ev.state.head<3>() - Vec3d(1 - mu2, 0, 0)).norm() - 0.01) < 1e-9);
    CHECK(tr.final_time() == ev.t);
    CHECK(tr.final_state() == ev.state);
  }
  SUBCASE("plane crossings with direction filter") {
    const State6d c = inner_orbit(mu2);
    const Trajectory tr = integrate(m, c, 0.0, 12.0, tight(),
                                    {EventSpec::plane_crossing(1, 0.0, +1)});
    CHECK_FALSE(tr.terminated);
    REQUIRE(tr.events.size() >= 2);
    for (const auto& ev : tr.events) {
      CHECK(std::abs(ev.state[1]) < 1e-10);
      CHECK(ev.state[4] > 0);
    }
  }
  SUBCASE("custom terminal event stops the run") {
    const State6d c = inner_orbit(mu2);
    const Trajectory tr = integrate(
        m, c, 0.0, 10.0, tight(),
        {EventSpec::custom([](double t, const State6d&) { return t - 1.2345; }, 0, true)});
    CHECK(tr.terminated);
    CHECK(tr.final_time() == doctest::Approx(1.2345).epsilon(1e-12));
  }
  CHECK_THROWS_AS(EventSpec::collision(1, 0.0), std::invalid_argument);
}

TEST_CASE("tangent vector grows at the unstable rate of L1") {
  const SystemModel m = make_cr3bp(0.0121);
  const State6d l1 = lagrange_points(m)[0];
  Eigen::EigenSolver<Mat6d> es(state_jacobian(m, l1, 0.0));
  int k = 0;
  for (int i = 1; i < 6; ++i)
    if (es.eigenvalues()[i].real() > es.eigenvalues()[k].real())
      k = i;
  const double lambda = es.eigenvalues()[k].real();
  CHECK(lambda > 1.0);
  State6d v0 = es.eigenvectors().col(k).real();
  v0.normalize();
  const TangentTrajectory tr = integrate_with_tangent(m, l1, v0, 0.0, 2.0, tight());
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const double expected = std::exp(lambda * tr.t[i]);
    CHECK(std::abs(tr.tangents[i].norm() / expected - 1.0) < 0.05);
  }
  CHECK_THROWS_AS(integrate_with_tangent(m, l1, State6d::Zero(), 0.0, 1.0, tight()),
                  std::invalid_argument);
}

TEST_CASE("state transition matrix") {
  const SystemModel m = testing::laplace_model();
  State6d s;
  s << -1.1, 0.2, 0.1, 0.05, -0.1, 0.0;
  CHECK(stm_propagate(m, s, 1.0, 1.0, tight()).stm == Mat6d::Identity());

  const StmResult a = stm_propagate(m, s, 0.0, 1.5, tight());
  const StmResult b = stm_propagate(m, a.state, 1.5, 3.0, tight());
  const StmResult c = stm_propagate(m, s, 0.0, 3.0, tight());
  CHECK(std::abs(c.stm.determinant() - 1.0) < 1e-6);
  const Mat6d composed = b.stm * a.stm;
  CHECK((composed - c.stm).cwiseAbs().maxCoeff() < 1e-7 * std::max(1.0, c.stm.cwiseAbs().maxCoeff()));
  CHECK((c.state - integrate(m, s, 0.0, 3.0, tight()).final_state()).norm() < 1e-10);

  // Columns obey the tangent equation.
  State6d v0;
  v0 << 0.3, -0.1, 0.2, 0.5, 0.1, -0.4;
  const TangentTrajectory tt = integrate_with_tangent(m, s, v0, 0.0, 3.0, tight());
  CHECK((tt.tangents.back() - c.stm * v0).norm() < 1e-8 * std::max(1.0, (c.stm * v0).norm()));

  // Finite-difference oracle on the flow map.
  const double h = 1e-6;
  for (int col = 0; col < 6; ++col) {
    State6d sp = s, sm = s;
    sp[col] += h;
    sm[col] -= h;
    const State6d fd = (integrate(m, sp, 0.0, 3.0, tight()).final_state() -
                        integrate(m, sm, 0.0, 3.0, tight()).final_state()) /
                       (2 * h);
    CHECK((fd - c.stm.col(col)).norm() < 1e-5 * std::max(1.0, fd.norm()));
  }
}
