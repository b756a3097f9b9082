#include "crnbp/fli.hpp"

#include "crnbp/ephem.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace crnbp {

double solve_kepler(double mean_anomaly, double e, double tol) {
  if (!(e >= 0.0 && e < 1.0))
    throw std::invalid_argument("eccentricity must lie in [0, 1)");
  const double M = std::remainder(mean_anomaly, 2.0 * std::numbers::pi);
  double E = e < 0.8 ? M : (M >= 0 ? std::numbers::pi : -std::numbers::pi);
  for (int i = 0; i < 100; ++i) {
    const double dE = (E - e * std::sin(E) - M) / (1.0 - e * std::cos(E));
    E -= dE;
    if (std::abs(dE) < tol)
      return E + (mean_anomaly - M);
  }
  throw std::runtime_error("Kepler iteration did not converge");
}

State6d elements_to_state(const SystemModel& model, double a, double e, double mean_anomaly,
                          double varpi) {
  if (!(a > 0))
    throw std::invalid_argument("semi-major axis must be positive");
  const double E = solve_kepler(mean_anomaly, e);
  const double beta = std::sqrt(1.0 - e * e);
  // Perifocal position and velocity with GM = 1.
  const double x = a * (std::cos(E) - e), y = a * beta * std::sin(E);
  const double r = a * (1.0 - e * std::cos(E));
  const double k = std::sqrt(a) / r;
  const double vx = -k * std::sin(E), vy = k * beta * std::cos(E);
  const double c = std::cos(varpi), s = std::sin(varpi);
  const Vec3d pos(c * x - s * y, s * x + c * y, 0.0);
  const Vec3d vel(c * vx - s * vy, s * vx + c * vy, 0.0);
  // The M1-M2 line at t = 0 is the first axis of the aligned fixed frame.
  return fixed_to_synodic(Mat3d::Identity(), model.mu2(), 0.0, pos, vel);
}

double tisserand(double a_p, double a, double e) {
  return a_p / a + 2.0 * std::sqrt(a / a_p * (1.0 - e * e));
}

namespace {

template <class F>
double bisect(F&& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

TisserandCurve tisserand_curve(double a_p, double value, double e_min, double e_max, int samples) {
  if (!(a_p > 0) || samples < 2 || !(e_min >= 0 && e_min <= e_max && e_max < 1))
    throw std::invalid_argument("invalid Tisserand curve request");
  TisserandCurve out;
  for (int k = 0; k < samples; ++k) {
    const double e = e_min + (e_max - e_min) * k / (samples - 1);
    const double c = std::sqrt(1.0 - e * e);
    // With u = sqrt(a / a_p): 1/u^2 + 2 c u = value, minimum at u* = c^(-1/3).
    auto f = [&](double u) { return 1.0 / (u * u) + 2.0 * c * u - value; };
    const double u_star = std::cbrt(1.0 / c);
    const double f_min = f(u_star);
    if (f_min > 0)
      continue;
    if (f_min == 0) {
      out.inner.emplace_back(a_p * u_star * u_star, e);
      out.outer.emplace_back(a_p * u_star * u_star, e);
      continue;
    }
    const double u_in = bisect(f, 1e-6, u_star);
    const double u_out = bisect(f, u_star, value / (2.0 * c) + 1.0);
    out.inner.emplace_back(a_p * u_in * u_in, e);
    out.outer.emplace_back(a_p * u_out * u_out, e);
  }
  return out;
}

const char* to_string(CellStatus status) {
  switch (status) {
  case CellStatus::ok:
    return "ok";
  case CellStatus::collided:
    return "collided";
  case CellStatus::singular:
    return "singular";
  case CellStatus::failed:
    return "failed";
  }
  return "?";
}

FliResult fli_of(const SystemModel& model, const State6d& state0, double horizon,
                 const FliSettings& settings) {
  if (!(horizon >= 0))
    throw std::invalid_argument("FLI horizon must be non-negative");
  if (settings.checkpoints < 1)
    throw std::invalid_argument("at least one FLI checkpoint is required");
  settings.integrator.validate();

  FliResult out;
  const double log0 = std::log(settings.V0.norm());
  out.value = log0;
  out.running_max.assign(std::size_t(settings.checkpoints), log0);
  if (horizon == 0)
    return out;

  using Vec12 = Eigen::Matrix<double, 12, 1>;
  Vec12 y0;
  y0 << state0, settings.V0;
  double log_scale = 0; // log of the factor divided out of V so far
  double sup = log0;
  std::size_t next = 0;
  auto checkpoint_time = [&](std::size_t k) {
    return k + 1 == std::size_t(settings.checkpoints) ? horizon
                                                      : horizon * double(k + 1) / double(settings.checkpoints);
  };

  std::vector<EventSpec> events;
  if (settings.stop_on_collision)
    events = collision_events(model, true);
  for (const auto& ev : events)
    if (ev.evaluate(model, 0.0, state0) <= 0) {
      out.status = CellStatus::collided;
      return out;
    }

  try {
    const auto terminal = detail::drive<12>(
        model, detail::tangent_rhs(model), y0, 0.0, horizon, settings.integrator, events, nullptr,
        [&](auto& stepper) {
          // checkpoints strictly inside the step see only earlier accepted steps
          while (next < out.running_max.size() && checkpoint_time(next) < stepper.t())
            out.running_max[next++] = sup;
          const double norm = stepper.y().template tail<6>().norm();
          sup = std::max(sup, log_scale + std::log(norm));
          while (next < out.running_max.size() && checkpoint_time(next) <= stepper.t())
            out.running_max[next++] = sup;
          if (norm > settings.renormalize_above) {
            stepper.scale_tail(6, 1.0 / norm);
            log_scale += std::log(norm);
          }
          out.t_end = stepper.t();
          return true;
        });
    if (terminal) {
      out.status = CellStatus::collided;
      out.t_end = terminal->t;
    }
  } catch (const SingularityError&) {
    out.status = CellStatus::singular;
  } catch (const IntegrationError&) {
    out.status = CellStatus::failed;
  }
  out.value = sup;
  // Aborted runs keep the value reached at abort time for the rest of the horizon.
  for (; next < out.running_max.size(); ++next)
    out.running_max[next] = sup;
  return out;
}

void GridSpec::validate() const {
  if (!(a_min > 0) || !(a_max >= a_min) || n_a < 1)
    throw std::invalid_argument("grid: need 0 < a_min <= a_max and n_a >= 1");
  if (!(e_min >= 0) || !(e_max >= e_min) || !(e_max < 1) || n_e < 1)
    throw std::invalid_argument("grid: need 0 <= e_min <= e_max < 1 and n_e >= 1");
  if (!(horizon > 0))
    throw std::invalid_argument("grid: horizon must be positive");
}

double GridSpec::a_at(int i) const {
  return n_a == 1 ? a_min : a_min + (a_max - a_min) * i / (n_a - 1);
}

double GridSpec::e_at(int j) const {
  return n_e == 1 ? e_min : e_min + (e_max - e_min) * j / (n_e - 1);
}

FliGrid scan(const SystemModel& model, const GridSpec& spec, const FliSettings& settings,
             int threads, const std::function<void(int)>& progress) {
  spec.validate();
  const int cells = spec.n_a * spec.n_e;
  FliGrid grid;
  grid.spec = spec;
  grid.values.resize(spec.n_e, spec.n_a);
  grid.status.assign(std::size_t(cells), CellStatus::ok);
  grid.running.assign(std::size_t(cells), {});

  std::atomic<int> next{0}, done{0};
  auto work = [&] {
    for (int c = next++; c < cells; c = next++) {
      const int j = c / spec.n_a, i = c % spec.n_a;
      FliResult r;
      try {
        const State6d x0 =
            elements_to_state(model, spec.a_at(i), spec.e_at(j), spec.mean_anomaly, spec.varpi);
        r = fli_of(model, x0, spec.horizon, settings);
      } catch (const SingularityError&) {
        r.status = CellStatus::singular;
        r.running_max.assign(std::size_t(settings.checkpoints), r.value);
      }
      grid.values(j, i) = r.value;
      grid.status[std::size_t(c)] = r.status;
      grid.running[std::size_t(c)] = std::move(r.running_max);
      const int finished = ++done;
      if (progress)
        progress(finished);
    }
  };
  threads = std::max(1, std::min(threads, cells));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t)
    pool.emplace_back(work);
  work();
  for (auto& t : pool)
    t.join();
  return grid;
}

namespace {

template <class Cell>
void write_matrix(std::ostream& out, const GridSpec& spec, Cell&& cell) {
  const auto old = out.precision(17);
  out << "e\\a";
  for (int i = 0; i < spec.n_a; ++i)
    out << ',' << spec.a_at(i);
  out << '\n';
  for (int j = 0; j < spec.n_e; ++j) {
    out << spec.e_at(j);
    for (int i = 0; i < spec.n_a; ++i) {
      out << ',';
      cell(out, j, i);
    }
    out << '\n';
  }
  out.precision(old);
}

} // namespace

void write_grid_csv(std::ostream& out, const FliGrid& grid) {
  write_matrix(out, grid.spec, [&](std::ostream& o, int j, int i) { o << grid.values(j, i); });
}

void write_status_csv(std::ostream& out, const FliGrid& grid) {
  write_matrix(out, grid.spec,
               [&](std::ostream& o, int j, int i) { o << int(grid.status_at(j, i)); });
}

void write_tisserand_csv(std::ostream& out, const TisserandCurve& curve) {
  const auto old = out.precision(17);
  out << "branch,a,e\n";
  for (const auto& p : curve.inner)
    out << "inner," << p.x() << ',' << p.y() << '\n';
  for (const auto& p : curve.outer)
    out << "outer," << p.x() << ',' << p.y() << '\n';
  out.precision(old);
}

} // namespace crnbp
