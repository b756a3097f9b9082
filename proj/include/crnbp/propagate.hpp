#pragma once

#include "crnbp/bodies.hpp"
#include "crnbp/dynamics.hpp"
#include "crnbp/integrator.hpp"
#include "crnbp/types.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

namespace crnbp {

enum class Direction { forward, backward };

struct IntegratorSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 5'000'000;
  /// When set, must agree with the sign of t1 - t0.
  std::optional<Direction> direction;
  /// Keep every stride-th accepted step in the returned trajectory.
  int stride = 1;
  /// If positive, sample the trajectory on a uniform grid through the dense output instead.
  double sample_dt = 0.0;

  void validate() const;
  StepperSettings stepper() const { return {rel_tol, abs_tol, max_step, max_steps}; }
};

/// Scalar event g(t, X); a root of g is an event.
struct EventSpec {
  enum class Kind { collision, plane_crossing, custom };

  Kind kind = Kind::custom;
  int body = -1;       ///< collision: model index of the massive body
  double radius = 0.0; ///< collision: canonical radius
  int component = 0;   ///< plane crossing: state component 0..5
  double value = 0.0;  ///< plane crossing: level
  /// +1 only rising roots, -1 only falling roots, 0 both.
  int crossing = 0;
  std::function<double(double, const State6d&)> function;
  bool terminal = false;

  static EventSpec collision(int body, double radius, bool terminal = true);
  static EventSpec plane_crossing(int component, double value, int crossing = 0,
                                  bool terminal = false);
  static EventSpec custom(std::function<double(double, const State6d&)> g, int crossing = 0,
                          bool terminal = false);

  double evaluate(const SystemModel& model, double t, const State6d& x) const;
};

/// Collision events for every massive body with a positive radius.
std::vector<EventSpec> collision_events(const SystemModel& model, bool terminal = true);

struct EventRecord {
  std::size_t event = 0;
  double t = 0;
  State6d state;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<State6d> states;
  std::vector<EventRecord> events;
  bool terminated = false;
  long steps = 0;

  const State6d& final_state() const { return states.back(); }
  double final_time() const { return t.back(); }
};

struct TangentTrajectory {
  std::vector<double> t;
  std::vector<State6d> states;
  std::vector<State6d> tangents;
};

struct StmResult {
  double t = 0;
  State6d state;
  Mat6d stm;
};

Trajectory integrate(const SystemModel& model, const State6d& state0, double t0, double t1,
                     const IntegratorSettings& settings, const std::vector<EventSpec>& events = {});

TangentTrajectory integrate_with_tangent(const SystemModel& model, const State6d& state0,
                                         const State6d& V0, double t0, double t1,
                                         const IntegratorSettings& settings);

StmResult stm_propagate(const SystemModel& model, const State6d& state0, double t0, double t1,
                        const IntegratorSettings& settings);

/// CSV with header t,x,y,z,vx,vy,vz.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
/// CSV with header t,x,y,z,vx,vy,vz,V1..V6.
void write_trajectory_csv(std::ostream& out, const TangentTrajectory& trajectory);

namespace detail {

inline auto state_rhs(const SystemModel& model) {
  return [&model](double t, const State6d& x) -> State6d { return vector_field(model, x, t); };
}

inline auto tangent_rhs(const SystemModel& model) {
  using Vec12 = Eigen::Matrix<double, 12, 1>;
  return [&model](double t, const Vec12& y) -> Vec12 {
    const State6d x = y.head<6>();
    Vec12 out;
    out.head<6>() = vector_field(model, x, t);
    out.tail<6>() = state_jacobian(model, x, t) * y.tail<6>();
    return out;
  };
}

inline auto stm_rhs(const SystemModel& model) {
  using Vec42 = Eigen::Matrix<double, 42, 1>;
  return [&model](double t, const Vec42& y) -> Vec42 {
    const State6d x = y.head<6>();
    const Eigen::Map<const Mat6d> phi(y.data() + 6);
    Vec42 out;
    out.head<6>() = vector_field(model, x, t);
    Eigen::Map<Mat6d>(out.data() + 6) = state_jacobian(model, x, t) * phi;
    return out;
  };
}

/// Locates a root of g on [a, b] given opposite-signed ends (Illinois false position).
template <class G>
double refine_root(G&& g, double a, double b, double ga, double gb) {
  int side = 0;
  for (int i = 0; i < 200; ++i) {
    const double c = (a * gb - b * ga) / (gb - ga);
    if (std::abs(b - a) <= 1e-14 * (1.0 + std::abs(a)))
      return c;
    const double gc = g(c);
    if (gc == 0.0)
      return c;
    if ((gc > 0) == (gb > 0)) {
      b = c;
      gb = gc;
      if (side == -1)
        ga *= 0.5;
      side = -1;
    } else {
      a = c;
      ga = gc;
      if (side == +1)
        gb *= 0.5;
      side = +1;
    }
  }
  return 0.5 * (a + b);
}

/// Drives a Dop853 stepper from t0 to t1. After every accepted step `on_step(stepper)`
/// is called; returning false stops the run. Events act on the leading six components.
/// Returns the index of the terminal event that stopped the run, if any.
template <int Dim, class Rhs, class OnStep>
std::optional<EventRecord> drive(const SystemModel& model, Rhs rhs,
                                 const Eigen::Matrix<double, Dim, 1>& y0, double t0, double t1,
                                 const IntegratorSettings& settings,
                                 const std::vector<EventSpec>& events,
                                 std::vector<EventRecord>* log, OnStep&& on_step,
                                 Eigen::Matrix<double, Dim, 1>* terminal_y = nullptr) {
  Dop853<Dim, Rhs> stepper(std::move(rhs), t0, y0, t1, settings.stepper());
  std::vector<double> g_prev(events.size());
  for (std::size_t i = 0; i < events.size(); ++i)
    g_prev[i] = events[i].evaluate(model, t0, y0.template head<6>());

  while (!stepper.finished()) {
    stepper.step();
    const double ta = stepper.t_old();
    const double tb = stepper.t();

    std::optional<EventRecord> first_terminal;
    std::vector<EventRecord> fired;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double gb = events[i].evaluate(model, tb, stepper.y().template head<6>());
      const double ga = g_prev[i];
      g_prev[i] = gb;
      const bool rising = ga < 0 && gb >= 0;
      const bool falling = ga > 0 && gb <= 0;
      if (!(rising || falling))
        continue;
      if ((events[i].crossing > 0 && !rising) || (events[i].crossing < 0 && !falling))
        continue;
      auto g = [&](double t) {
        return events[i].evaluate(model, t, stepper.dense(t).template head<6>());
      };
      const double te = gb == 0.0 ? tb : refine_root(g, ta, tb, ga, gb);
      EventRecord rec{i, te, stepper.dense(te).template head<6>()};
      if (events[i].terminal) {
        if (!first_terminal || stepper.direction() * (te - first_terminal->t) < 0)
          first_terminal = rec;
      }
      fired.push_back(rec);
    }
    std::sort(fired.begin(), fired.end(), [&](const EventRecord& a, const EventRecord& b) {
      return stepper.direction() * (a.t - b.t) < 0;
    });
    for (const auto& rec : fired) {
      if (first_terminal && stepper.direction() * (rec.t - first_terminal->t) > 0)
        break;
      if (log)
        log->push_back(rec);
    }
    if (first_terminal) {
      if (terminal_y)
        *terminal_y = stepper.dense(first_terminal->t);
      return first_terminal;
    }
    if (!on_step(stepper))
      break;
  }
  return std::nullopt;
}

} // namespace detail

} // namespace crnbp
