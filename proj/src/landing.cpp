#include "crnbp/landing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace crnbp {

std::vector<double> LandingSpec::default_thetas() {
  std::vector<double> out(360);
  for (int i = 0; i < 360; ++i)
    out[std::size_t(i)] = i;
  return out;
}

void LandingSpec::validate() const {
  integrator.validate();
  if (!(duration_days > 0))
    throw ConfigError("landing duration must be positive");
  if (!(altitude_km >= 0))
    throw ConfigError("landing altitude must be non-negative");
  if (lagrange_index < 0 || lagrange_index > 2)
    throw ConfigError("the reference Jacobi constant needs a collinear point (L1..L3)");
  if (!(sample_days >= 0))
    throw ConfigError("sample spacing must be non-negative");
  if (theta_deg.empty())
    throw ConfigError("no landing longitudes requested");
}

const char* to_string(LandingOutcome outcome) {
  switch (outcome) {
  case LandingOutcome::survived:
    return "survived";
  case LandingOutcome::collided:
    return "collided";
  case LandingOutcome::infeasible:
    return "infeasible";
  case LandingOutcome::failed:
    return "failed";
  }
  return "?";
}

std::size_t LandingSweep::count(LandingOutcome outcome) const {
  return std::size_t(std::count_if(records.begin(), records.end(),
                                   [&](const LandingRecord& r) { return r.outcome == outcome; }));
}

double hill_radius(const SystemModel& model) { return std::cbrt(model.mu2() / 3.0); }

std::optional<State6d> landing_state(const SystemModel& model, double theta, double altitude,
                                     double jacobi) {
  const double rho = model.body_radii[1] + altitude;
  const Vec3d rel(rho * std::cos(theta), rho * std::sin(theta), 0.0);
  State6d x = State6d::Zero();
  x.head<3>() = Vec3d(model.mu1(), 0.0, 0.0) + rel;
  const double r1 = (x.head<3>() - Vec3d(-model.mu2(), 0, 0)).norm();
  const double v2 = x[0] * x[0] + x[1] * x[1] + 2.0 * (model.mu1() / r1 + model.mu2() / rho) - jacobi;
  if (v2 < 0)
    return std::nullopt;
  // z x rel: horizontal, counter-clockwise about M2
  x.segment<3>(3) = std::sqrt(v2) * Vec3d(-rel.y(), rel.x(), 0.0).normalized();
  return x;
}

LandingSweep landing_sweep(const SystemModel& model, const LandingSpec& spec, int threads) {
  spec.validate();
  if (!(model.body_radii[1] > 0))
    throw ConfigError("landing needs a positive radius for M2");

  LandingSweep out;
  out.spec = spec;
  const SystemModel unforced = with_epsilon(model, 0.0);
  out.jacobi = jacobi_constant(unforced, lagrange_points(unforced)[std::size_t(spec.lagrange_index)]);
  out.exit_radius = 1.0 + hill_radius(model);
  out.records.resize(spec.theta_deg.size());

  const double day = 86400.0 / model.time_unit;
  const double t0 = spec.arrival_days * day;
  const double t1 = t0 - spec.duration_days * day;
  const double altitude = spec.altitude_km / model.length_unit;
  IntegratorSettings settings = spec.integrator;
  settings.sample_dt = spec.sample_days * day;
  const auto events = collision_events(model, true);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < spec.theta_deg.size(); k = next++) {
      LandingRecord& rec = out.records[k];
      rec.theta_deg = spec.theta_deg[k];
      rec.t_start = t0;
      const auto x0 = landing_state(model, rec.theta_deg * std::numbers::pi / 180.0, altitude, out.jacobi);
      if (!x0) {
        rec.outcome = LandingOutcome::infeasible;
        continue;
      }
      rec.state0 = *x0;
      try {
        Trajectory tr = integrate(model, *x0, t0, t1, settings, events);
        rec.t_end = tr.final_time();
        rec.min_r1 = std::numeric_limits<double>::infinity();
        for (const auto& s : tr.states) {
          const double r1 = Vec3d(s[0] + model.mu2(), s[1], s[2]).norm();
          rec.min_r1 = std::min(rec.min_r1, r1);
          rec.max_r1 = std::max(rec.max_r1, r1);
        }
        if (tr.terminated) {
          rec.outcome = LandingOutcome::collided;
          const int body = events[tr.events.back().event].body;
          rec.collided_with = model.names.empty() ? std::to_string(body) : model.names[std::size_t(body)];
          continue;
        }
        rec.transeuropa = rec.max_r1 > out.exit_radius;
        rec.trajectory = std::move(tr);
      } catch (const SingularityError&) {
        rec.outcome = LandingOutcome::failed;
      } catch (const IntegrationError&) {
        rec.outcome = LandingOutcome::failed;
      }
    }
  };
  threads = std::max(1, std::min<int>(threads, int(spec.theta_deg.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t)
    pool.emplace_back(work);
  work();
  for (auto& t : pool)
    t.join();
  return out;
}

void write_landing_summary_csv(std::ostream& out, const LandingSweep& sweep) {
  const auto old = out.precision(17);
  out << "theta_deg,outcome,min_r1,max_r1,transeuropa,t_end,collided_with\n";
  for (const auto& r : sweep.records)
    out << r.theta_deg << ',' << to_string(r.outcome) << ',' << r.min_r1 << ',' << r.max_r1 << ','
        << (r.transeuropa ? 1 : 0) << ',' << r.t_end << ',' << r.collided_with << '\n';
  out.precision(old);
}

} // namespace crnbp
