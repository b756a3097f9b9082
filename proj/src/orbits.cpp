#include "crnbp/orbits.hpp"

#include "crnbp/metadata.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace crnbp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using Vec7 = Eigen::Matrix<double, 7, 1>;

// Best rational approximation p/q of x with q <= max_den (continued fractions).
std::optional<std::pair<long, long>> rational(double x, long max_den, double tol) {
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(r);
    const long p2 = long(a) * p1 + p0, q2 = long(a) * q1 + q0;
    if (q2 > max_den)
      break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    if (std::abs(double(p1) / double(q1) - x) <= tol)
      return std::make_pair(p1, q1);
    const double frac = r - a;
    if (frac == 0)
      break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

// Minimum-norm least-squares solution, discarding singular values below
// `rel_cut` times the largest.
template <class Mat, class Vec>
Eigen::VectorXd min_norm_solve(const Mat& A, const Vec& b, double rel_cut) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(A), Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(rel_cut);
  return svd.solve(Eigen::VectorXd(b));
}

constexpr double kRankCut = 1e-10;

Vec7 pack(const State6d& x, double T) {
  Vec7 y;
  y << x, T;
  return y;
}

// Null direction of the free-period Jacobian with phase row F(X0).
Vec7 family_tangent(const SystemModel& model, const StmResult& stm, const State6d& x0,
                    double period) {
  Eigen::Matrix<double, 7, 7> A = Eigen::Matrix<double, 7, 7>::Zero();
  A.topLeftCorner<6, 6>() = stm.stm - Mat6d::Identity();
  A.topRightCorner<6, 1>() = vector_field(model, stm.state, period);
  A.bottomLeftCorner<1, 6>() = vector_field(model, x0, 0.0).transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 7, 7>> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().col(6);
}

} // namespace

std::optional<double> forcing_period(const SystemModel& model, long max_denominator) {
  long num_gcd = 0, den_lcm = 1;
  bool forced = false;
  for (std::size_t j = 2; j < model.massive_count(); ++j) {
    const double rate = model.n[j] - 1.0;
    if (rate == 0.0)
      continue;
    const auto pq = rational(std::abs(rate), max_denominator, 1e-9 * std::max(1.0, std::abs(rate)));
    if (!pq)
      return std::nullopt;
    forced = true;
    num_gcd = std::gcd(num_gcd, pq->first);
    den_lcm = std::lcm(den_lcm, pq->second);
  }
  if (!forced)
    return std::nullopt;
  // Every rate is a multiple of num_gcd / den_lcm, so T = 2 pi den_lcm / num_gcd.
  return kTwoPi * double(den_lcm) / double(num_gcd);
}

PeriodicOrbitProblem fixed_period_problem(const SystemModel& model, int p) {
  if (p < 1)
    throw ConfigError("the period multiple p must be positive");
  const auto T = forcing_period(model);
  if (!T)
    throw ConfigError("the system's mean motions are not commensurate; no forcing period");
  PeriodicOrbitProblem prob;
  prob.model = model;
  prob.mode = PeriodMode::fixed;
  prob.p = p;
  prob.forcing_period = *T;
  return prob;
}

double closure_residual(const PeriodicOrbitProblem& problem, const State6d& x0, double period) {
  const Trajectory tr = integrate(problem.model, x0, 0.0, period, problem.integrator);
  return (tr.final_state() - x0).lpNorm<Eigen::Infinity>();
}

OrbitFamilyMember newton_correct(const PeriodicOrbitProblem& problem, const State6d& guess,
                                 double guess_period) {
  const bool fixed = problem.mode == PeriodMode::fixed;
  double T = fixed ? problem.fixed_period() : guess_period;
  if (!(T > 0))
    throw std::invalid_argument("period must be positive");
  State6d x = guess;
  const State6d flow_ref = vector_field(problem.model, guess, 0.0);

  for (int it = 0; it <= problem.max_iterations; ++it) {
    const StmResult stm = stm_propagate(problem.model, x, 0.0, T, problem.integrator);
    // The residual comes from a plain state integration, which is what callers
    // re-check; the variational run, with its own step sequence, supplies the Jacobian.
    const State6d G = integrate(problem.model, x, 0.0, T, problem.integrator).final_state() - x;
    const double res = G.lpNorm<Eigen::Infinity>();
    if (res < problem.tol) {
      OrbitFamilyMember m;
      m.state0 = x;
      m.period = T;
      m.closure_residual = res;
      m.iterations = it;
      Eigen::EigenSolver<Mat6d> es(stm.stm, false);
      for (int k = 0; k < 6; ++k)
        m.monodromy_eigs[k] = es.eigenvalues()[k];
      return m;
    }
    if (it == problem.max_iterations)
      break;
    if (fixed) {
      Mat6d A = stm.stm - Mat6d::Identity();
      if (problem.pinned >= 0)
        A.col(problem.pinned).setZero();
      const Eigen::VectorXd d = min_norm_solve(A, -G, kRankCut);
      x += d;
    } else {
      Eigen::Matrix<double, 7, 7> A = Eigen::Matrix<double, 7, 7>::Zero();
      A.topLeftCorner<6, 6>() = stm.stm - Mat6d::Identity();
      A.topRightCorner<6, 1>() = vector_field(problem.model, stm.state, T);
      A.bottomLeftCorner<1, 6>() = flow_ref.transpose();
      if (problem.pinned >= 0)
        A.col(problem.pinned).setZero(); // min-norm leaves that component untouched
      Vec7 b;
      b << -G, -flow_ref.dot(x - guess);
      const Eigen::VectorXd d = min_norm_solve(A, b, kRankCut);
      x += d.head<6>();
      T += d[6];
      if (!(T > 0))
        break;
    }
    if (!x.allFinite())
      break;
  }
  throw ConvergenceError("differential correction did not converge");
}

MonodromySummary monodromy(const PeriodicOrbitProblem& problem, const OrbitFamilyMember& member) {
  MonodromySummary out;
  out.matrix = stm_propagate(problem.model, member.state0, 0.0, member.period, problem.integrator).stm;
  out.determinant = out.matrix.determinant();
  Eigen::EigenSolver<Mat6d> es(out.matrix, false);
  for (int k = 0; k < 6; ++k)
    out.eigenvalues[k] = es.eigenvalues()[k];
  for (int i = 0; i < 6; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 6; ++k)
      if (k != i)
        best = std::min(best, std::abs(out.eigenvalues[i] * out.eigenvalues[k] - 1.0));
    out.reciprocal_residual = std::max(out.reciprocal_residual, best);
  }
  std::array<double, 6> dist;
  for (int k = 0; k < 6; ++k)
    dist[k] = std::abs(out.eigenvalues[k] - 1.0);
  std::sort(dist.begin(), dist.end());
  out.unit_pair_residual = dist[1];
  return out;
}

namespace {

// Corrector for the bordered system: closure, phase at x_ref, arclength along tangent.
// Near-Kepler orbits leave O(mu) singular values in the Jacobian, so full Newton
// steps can overshoot; steps are halved until the residual norm drops.
std::optional<OrbitFamilyMember> arclength_correct(const PeriodicOrbitProblem& problem,
                                                   const State6d& x_ref, double T_ref,
                                                   const Vec7& tangent, double ds,
                                                   int max_iterations) {
  const Vec7 y_ref = pack(x_ref, T_ref);
  const State6d flow_ref = vector_field(problem.model, x_ref, 0.0);

  struct Eval {
    Vec7 y;
    StmResult stm;
    Eigen::Matrix<double, 8, 1> r;
  };
  auto evaluate = [&](const Vec7& y) {
    const State6d x = y.head<6>();
    Eval e{y, stm_propagate(problem.model, x, 0.0, y[6], problem.integrator), {}};
    e.r << integrate(problem.model, x, 0.0, y[6], problem.integrator).final_state() - x, flow_ref.dot(y.head<6>() - x_ref), tangent.dot(y - y_ref) - ds;
    return e;
  };

  try {
    Eval cur = evaluate(y_ref + ds * tangent);
    for (int it = 0; it <= max_iterations; ++it) {
      const double res = cur.r.head<6>().lpNorm<Eigen::Infinity>();
      if (res < problem.tol && std::abs(cur.r[6]) < 1e-9 && std::abs(cur.r[7]) < 1e-9) {
        OrbitFamilyMember m;
        m.state0 = cur.y.head<6>();
        m.period = cur.y[6];
        m.closure_residual = res;
        m.iterations = it;
        Eigen::EigenSolver<Mat6d> es(cur.stm.stm, false);
        for (int k = 0; k < 6; ++k)
          m.monodromy_eigs[k] = es.eigenvalues()[k];
        return m;
      }
      if (it == max_iterations)
        break;
      Eigen::Matrix<double, 8, 7> A = Eigen::Matrix<double, 8, 7>::Zero();
      A.topLeftCorner<6, 6>() = cur.stm.stm - Mat6d::Identity();
      A.block<6, 1>(0, 6) = vector_field(problem.model, cur.stm.state, cur.y[6]);
      A.block<1, 6>(6, 0) = flow_ref.transpose();
      A.row(7) = tangent.transpose();
      const Vec7 d = min_norm_solve(A, -cur.r, 1e-13);
      if (!d.allFinite())
        return std::nullopt;
      double lambda = 1.0;
      for (;;) {
        const Vec7 trial = cur.y + lambda * d;
        if (trial[6] > 0) {
          Eval next = evaluate(trial);
          if (next.r.norm() < cur.r.norm() || lambda < 1.0 / 16) {
            cur = std::move(next);
            break;
          }
        }
        lambda *= 0.5;
        if (lambda < 1.0 / 16)
          return std::nullopt;
      }
    }
  } catch (const SingularityError&) {
  } catch (const IntegrationError&) {
  }
  return std::nullopt;
}

} // namespace

FamilyResult continue_family(const PeriodicOrbitProblem& problem, const OrbitFamilyMember& first,
                             const ContinuationSpec& spec) {
  if (problem.mode != PeriodMode::free)
    throw std::invalid_argument("family continuation needs the free-period mode");
  if (spec.members < 1 || !(spec.step > 0) || !(spec.min_step > 0) || spec.max_step < spec.step)
    throw std::invalid_argument("invalid continuation step settings");

  FamilyResult out;
  OrbitFamilyMember seed = first;
  seed.param = 0;
  out.members.push_back(seed);
  Vec7 tangent;
  if (problem.pinned >= 0) {
    // a short pinned step; the linear seed is only good for small amplitudes
    double h = 0.05 * (spec.hint[problem.pinned] < 0 ? -spec.step : spec.step);
    std::optional<OrbitFamilyMember> probe;
    while (!probe) {
      State6d guess = seed.state0;
      guess[problem.pinned] += h;
      try {
        probe = newton_correct(problem, guess, seed.period);
      } catch (const ConvergenceError&) {
        h *= 0.5;
        if (std::abs(h) < spec.min_step)
          throw;
      }
    }
    const OrbitFamilyMember& second = *probe;
    tangent = (pack(second.state0, second.period) - pack(seed.state0, seed.period)).normalized();
  } else {
    const StmResult stm0 = stm_propagate(problem.model, seed.state0, 0.0, seed.period, problem.integrator);
    tangent = family_tangent(problem.model, stm0, seed.state0, seed.period);
  }
  if (tangent.dot(spec.hint) < 0)
    tangent = -tangent;
  out.tangents.push_back(tangent);

  double ds = spec.step;
  while (int(out.members.size()) < spec.members) {
    const OrbitFamilyMember& last = out.members.back();
    const auto next = arclength_correct(problem, last.state0, last.period, tangent, ds, 8);
    if (!next) {
      ds *= 0.5;
      if (ds < spec.min_step) {
        out.complete = false;
        out.diagnostic = "step underflow after " + std::to_string(out.members.size()) + " members";
        break;
      }
      continue;
    }
    OrbitFamilyMember m = *next;
    m.param = last.param + ds;
    // Secant tangent: the null space of the bordered Jacobian is nearly degenerate
    // for near-Kepler orbits and does not pick out the family reliably.
    tangent = (pack(m.state0, m.period) - pack(last.state0, last.period)).normalized();
    out.members.push_back(m);
    out.tangents.push_back(tangent);
    if (spec.stop && spec.stop(m))
      break;
    if (m.iterations <= 5)
      ds = std::min(spec.max_step, 1.5 * ds);
  }
  return out;
}

OrbitFamilyMember member_with_period(const PeriodicOrbitProblem& problem,
                                     const FamilyResult& family, double target,
                                     double period_tol) {
  const auto& ms = family.members;
  for (std::size_t k = 0; k + 1 < ms.size(); ++k) {
    const double f0 = ms[k].period - target, f1 = ms[k + 1].period - target;
    if (f0 == 0)
      return ms[k];
    if ((f0 > 0) == (f1 > 0))
      continue;
    double lo = 0, hi = ms[k + 1].param - ms[k].param;
    double flo = f0;
    OrbitFamilyMember best = std::abs(f0) < std::abs(f1) ? ms[k] : ms[k + 1];
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const auto m = arclength_correct(problem, ms[k].state0, ms[k].period, family.tangents[k], mid, 12);
      if (!m)
        throw ConvergenceError("corrector failed while bisecting along the family");
      OrbitFamilyMember cur = *m;
      cur.param = ms[k].param + mid;
      const double fm = cur.period - target;
      if (std::abs(fm) < std::abs(best.period - target))
        best = cur;
      if (std::abs(fm) < period_tol)
        return cur;
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
      if (hi - lo < 1e-15)
        break;
    }
    return best;
  }
  throw ConvergenceError("no family member brackets the requested period");
}

std::pair<State6d, double> vertical_lyapunov_seed(const SystemModel& model, int lagrange_index,
                                                  double amplitude) {
  if (lagrange_index < 0 || lagrange_index > 2)
    throw std::invalid_argument("vertical Lyapunov seeds need a collinear point (L1..L3)");
  State6d x = lagrange_points(model)[std::size_t(lagrange_index)];
  const double r1 = std::abs(x[0] + model.mu2()), r2 = std::abs(x[0] - model.mu1());
  const double wz = std::sqrt(model.mu1() / (r1 * r1 * r1) + model.mu2() / (r2 * r2 * r2));
  x[5] = amplitude * wz;
  return {x, kTwoPi / wz};
}

namespace {

SystemModel at_epsilon(SystemModel model, double eps) {
  model.epsilon = eps; // the arclength path may step slightly outside [0, 1]
  return model;
}

State6d flow_end(const PeriodicOrbitProblem& problem, double eps, const State6d& x) {
  return integrate(at_epsilon(problem.model, eps), x, 0.0, problem.fixed_period(), problem.integrator)
      .final_state();
}

// Closure map Jacobian [Phi - I | dG/d epsilon]; the epsilon column by central
// differences (the field is affine in epsilon, so h only trades rounding for truncation).
Eigen::Matrix<double, 6, 7> closure_jacobian(const PeriodicOrbitProblem& problem, double eps,
                                             const State6d& x) {
  constexpr double h = 1e-6;
  Eigen::Matrix<double, 6, 7> J;
  J.leftCols<6>() =
      stm_propagate(at_epsilon(problem.model, eps), x, 0.0, problem.fixed_period(), problem.integrator).stm -
      Mat6d::Identity();
  J.col(6) = (flow_end(problem, eps + h, x) - flow_end(problem, eps - h, x)) / (2 * h);
  return J;
}

Vec7 null_tangent(const Eigen::Matrix<double, 6, 7>& J, const Vec7& orient) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 7>> svd(J, Eigen::ComputeFullV);
  Vec7 t = svd.matrixV().col(6);
  return t.dot(orient) < 0 ? Vec7(-t) : t;
}

OrbitFamilyMember eps_member(const Vec7& y, double res, int it, const Eigen::Matrix<double, 6, 7>& J,
                             double period) {
  OrbitFamilyMember m;
  m.state0 = y.head<6>();
  m.param = y[6];
  m.period = period;
  m.closure_residual = res;
  m.iterations = it;
  Eigen::EigenSolver<Mat6d> es(Mat6d(J.leftCols<6>() + Mat6d::Identity()), false);
  for (int k = 0; k < 6; ++k)
    m.monodromy_eigs[k] = es.eigenvalues()[k];
  return m;
}

// Corrector on the hyperplane tangent . (y - y_ref) = ds, with step halving.
std::optional<std::pair<Vec7, int>> eps_arc_correct(const PeriodicOrbitProblem& problem,
                                                    const Vec7& y_ref, const Vec7& tangent,
                                                    double ds) {
  auto residual = [&](const Vec7& y) {
    Vec7 r;
    r << flow_end(problem, y[6], y.head<6>()) - y.head<6>(), tangent.dot(y - y_ref) - ds;
    return r;
  };
  try {
    Vec7 y = y_ref + ds * tangent;
    Vec7 r = residual(y);
    for (int it = 0; it <= 12; ++it) {
      if (r.head<6>().lpNorm<Eigen::Infinity>() < problem.tol && std::abs(r[6]) < 1e-9)
        return std::make_pair(y, it);
      Eigen::Matrix<double, 7, 7> A;
      A.topRows<6>() = closure_jacobian(problem, y[6], y.head<6>());
      A.row(6) = tangent.transpose();
      const Vec7 d = min_norm_solve(A, -r, 1e-13);
      double lambda = 1.0;
      for (;;) {
        const Vec7 trial = y + lambda * d;
        const Vec7 rt = residual(trial);
        if (rt.norm() < r.norm()) {
          y = trial;
          r = rt;
          break;
        }
        lambda *= 0.5;
        if (lambda < 1.0 / 16)
          return std::nullopt;
      }
    }
  } catch (const SingularityError&) {
  } catch (const IntegrationError&) {
  }
  return std::nullopt;
}

} // namespace

void epsilon_arclength(const PeriodicOrbitProblem& problem, const EpsilonSpec& spec,
                       EpsilonResult& out) {
  const double T = problem.fixed_period();
  auto pack_eps = [](const OrbitFamilyMember& m) {
    Vec7 y;
    y << m.state0, m.param;
    return y;
  };
  const Vec7 secant = pack_eps(out.members.back()) - pack_eps(out.members[out.members.size() - 2]);
  Vec7 y = pack_eps(out.members.back());
  Vec7 tangent = null_tangent(closure_jacobian(problem, y[6], y.head<6>()), secant);
  double ds = spec.arc_step;

  while (int(out.members.size()) < spec.max_members) {
    const auto next = eps_arc_correct(problem, y, tangent, ds);
    if (!next) {
      ds *= 0.5;
      if (ds < spec.min_step) {
        out.complete = false;
        out.diagnostic = "arclength corrector failed near epsilon = " + std::to_string(y[6]);
        return;
      }
      continue;
    }
    const Vec7 y_new = next->first;
    const auto J = closure_jacobian(problem, y_new[6], y_new.head<6>());
    const Vec7 t_new = null_tangent(J, tangent);
    if ((t_new[6] > 0) != (tangent[6] > 0))
      out.folds.push_back(y_new[6]);

    if (y_new[6] >= 1.0) {
      // the branch crossed epsilon = 1: land on it exactly
      const double w = (1.0 - y[6]) / (y_new[6] - y[6]);
      const State6d guess = y.head<6>() + w * (y_new.head<6>() - y.head<6>());
      PeriodicOrbitProblem last = problem;
      last.model = with_epsilon(problem.model, 1.0);
      try {
        OrbitFamilyMember m = newton_correct(last, guess, T);
        m.param = 1.0;
        out.members.push_back(m);
        return;
      } catch (const ConvergenceError&) {
        ds *= 0.5; // retry with a shorter step so the crossing is closer
        if (ds < spec.min_step) {
          out.complete = false;
          out.diagnostic = "could not land on epsilon = 1 after the arclength branch crossed it";
          return;
        }
        continue;
      }
    }
    if (y_new[6] <= 0.0) {
      out.complete = false;
      out.diagnostic = "the branch turned back to epsilon = 0 after folds";
      return;
    }
    const double res = (flow_end(problem, y_new[6], y_new.head<6>()) - y_new.head<6>()).lpNorm<Eigen::Infinity>();
    out.members.push_back(eps_member(y_new, res, next->second, J, T));
    y = y_new;
    tangent = t_new;
    if (next->second <= 4)
      ds = std::min(spec.arc_max_step, 1.5 * ds);
  }
  out.complete = false;
  out.diagnostic = "member limit reached before epsilon = 1";
}

EpsilonResult continue_epsilon(const PeriodicOrbitProblem& problem,
                               const OrbitFamilyMember& member_at_eps0, const EpsilonSpec& spec) {
  if (problem.mode != PeriodMode::fixed)
    throw std::invalid_argument("epsilon continuation runs at fixed period pT");
  const double T = problem.fixed_period();
  if (std::abs(member_at_eps0.period - T) > 1e-8)
    throw std::invalid_argument("the epsilon = 0 member's period must equal pT");
  if (!(spec.first_step > 0 && spec.first_step <= 1) || !(spec.min_step > 0))
    throw std::invalid_argument("invalid epsilon step settings");

  EpsilonResult out;
  OrbitFamilyMember start = member_at_eps0;
  start.param = 0;
  out.members.push_back(start);

  PeriodicOrbitProblem unforced = problem;
  unforced.model = with_epsilon(problem.model, 0.0);
  if (problem.model.perturber_count() == 0) {
    // epsilon multiplies empty sums: every epsilon reproduces the input
    for (double e : {0.25, 0.5, 0.75, 1.0}) {
      OrbitFamilyMember m = start;
      m.param = e;
      out.members.push_back(m);
    }
    out.aligned = start;
    return out;
  }

  auto forced_problem = [&](double eps) {
    PeriodicOrbitProblem p = problem;
    p.model = with_epsilon(problem.model, eps);
    return p;
  };

  // Phase selection along the unforced orbit.
  const double eps1 = spec.first_step;
  const PeriodicOrbitProblem p1 = forced_problem(eps1);
  IntegratorSettings grid = problem.integrator;
  grid.sample_dt = T / spec.phase_samples;
  const Trajectory orbit = integrate(unforced.model, start.state0, 0.0, T, grid);
  auto jacobi_change = [&](const State6d& x) {
    const Trajectory tr = integrate(p1.model, x, 0.0, T, problem.integrator);
    return jacobi_constant(p1.model, tr.final_state()) - jacobi_constant(p1.model, x);
  };
  auto state_at = [&](double tau) {
    return tau == 0 ? start.state0 : integrate(unforced.model, start.state0, 0.0, tau, problem.integrator).final_state();
  };
  const int n = spec.phase_samples;
  std::vector<double> dj(std::size_t(n) + 1);
  for (int i = 0; i < n; ++i)
    dj[i] = jacobi_change(orbit.states[std::size_t(i)]);
  dj[n] = dj[0];

  std::vector<double> candidates;
  for (int i = 0; i < n; ++i) {
    if ((dj[i] > 0) == (dj[i + 1] > 0))
      continue;
    double lo = T * i / n, hi = T * (i + 1) / n, flo = dj[i];
    for (int k = 0; k < 30; ++k) {
      const double mid = 0.5 * (lo + hi);
      const double fm = jacobi_change(state_at(mid));
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    candidates.push_back(0.5 * (lo + hi));
  }
  if (candidates.empty()) {
    out.complete = false;
    out.diagnostic = "no phase along the orbit balances the one-period Jacobi change";
    return out;
  }

  std::optional<OrbitFamilyMember> first;
  for (double tau : candidates) {
    try {
      first = newton_correct(p1, state_at(tau), T);
      out.phase_shift = tau;
      break;
    } catch (const ConvergenceError&) {
    } catch (const SingularityError&) {
    } catch (const IntegrationError&) {
    }
  }
  if (!first) {
    out.complete = false;
    out.diagnostic = "corrector failed at epsilon = " + std::to_string(eps1) + " for every candidate phase";
    return out;
  }
  first->param = eps1;
  out.members.push_back(*first);
  out.aligned = start;
  out.aligned.state0 = state_at(out.phase_shift);

  double eps = eps1, step = spec.first_step;
  double prev_step = 0;
  while (eps < 1.0) {
    const double target = std::min(1.0, eps + step);
    const OrbitFamilyMember& last = out.members.back();
    State6d guess = last.state0;
    if (out.members.size() >= 3 && prev_step > 0) {
      // secant predictor along epsilon
      const OrbitFamilyMember& before = out.members[out.members.size() - 2];
      guess += (last.state0 - before.state0) * ((target - eps) / prev_step);
    }
    std::optional<OrbitFamilyMember> next;
    try {
      next = newton_correct(forced_problem(target), guess, T);
    } catch (const ConvergenceError&) {
    } catch (const SingularityError&) {
    } catch (const IntegrationError&) {
    }
    if (!next) {
      step *= 0.5;
      if (step < std::max(spec.min_step, spec.arclength_below)) {
        if (out.members.size() < 3) {
          out.complete = false;
          out.diagnostic = "corrector failed near epsilon = " + std::to_string(eps);
          return out;
        }
        epsilon_arclength(problem, spec, out);
        return out;
      }
      continue;
    }
    next->param = target;
    prev_step = target - eps;
    eps = target;
    out.members.push_back(*next);
    if (next->iterations <= 4)
      step = std::min(spec.max_step, 1.5 * step);
  }
  return out;
}

Trajectory sample_orbit(const PeriodicOrbitProblem& problem, const OrbitFamilyMember& member,
                        int samples) {
  IntegratorSettings s = problem.integrator;
  s.sample_dt = member.period / samples;
  return integrate(problem.model, member.state0, 0.0, member.period, s);
}

OrbitDeformation orbit_deformation(const Trajectory& reference, const Trajectory& deformed) {
  const auto& a = reference.states;
  const auto& b = deformed.states;
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("orbit samples must be non-trivial and equally sized");
  const std::size_t n = a.size() - 1; // last sample repeats the first
  Eigen::MatrixXd d(n, n);            // d(i, k) = |b_i - a_k|
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      d(Eigen::Index(i), Eigen::Index(k)) = (b[i].head<3>() - a[k].head<3>()).norm();

  OrbitDeformation out;
  out.rephased_max = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s) {
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, d(Eigen::Index(i), Eigen::Index((i + s) % n)));
    if (s == 0)
      out.aligned_max = worst;
    out.rephased_max = std::min(out.rephased_max, worst);
  }
  out.hausdorff = std::max(d.rowwise().minCoeff().maxCoeff(), d.colwise().minCoeff().maxCoeff());
  return out;
}

nlohmann::json to_json(const OrbitFamilyMember& m, const PeriodicOrbitProblem& problem) {
  nlohmann::json eigs = nlohmann::json::array();
  for (const auto& l : m.monodromy_eigs)
    eigs.push_back({l.real(), l.imag()});
  return {{"state0", std::vector<double>(m.state0.data(), m.state0.data() + 6)},
          {"period", m.period},
          {"param", m.param},
          {"monodromy_eigs", eigs},
          {"closure_residual", m.closure_residual},
          {"iterations", m.iterations},
          {"mode", problem.mode == PeriodMode::free ? "free" : "fixed"},
          {"p", problem.p},
          {"epsilon", problem.model.epsilon},
          {"model_hash", model_hash_hex(problem.model)},
          {"tol", problem.tol},
          {"rel_tol", problem.integrator.rel_tol},
          {"abs_tol", problem.integrator.abs_tol},
          {"toolkit_version", toolkit_version()}};
}

OrbitFamilyMember member_from_json(const nlohmann::json& j) {
  OrbitFamilyMember m;
  const auto s = j.at("state0").get<std::vector<double>>();
  if (s.size() != 6)
    throw ConfigError("state0 must have six components");
  for (int i = 0; i < 6; ++i)
    m.state0[i] = s[std::size_t(i)];
  m.period = j.at("period").get<double>();
  m.param = j.value("param", 0.0);
  m.closure_residual = j.value("closure_residual", 0.0);
  m.iterations = j.value("iterations", 0);
  if (j.contains("monodromy_eigs"))
    for (std::size_t k = 0; k < 6 && k < j["monodromy_eigs"].size(); ++k)
      m.monodromy_eigs[k] = {j["monodromy_eigs"][k][0].get<double>(), j["monodromy_eigs"][k][1].get<double>()};
  return m;
}

} // namespace crnbp
