#include "crnbp/propagate.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace crnbp {

void IntegratorSettings::validate() const {
  auto in_range = [](double tol) { return tol >= 1e-15 && tol <= 1e-3; };
  if (!in_range(rel_tol) || !in_range(abs_tol))
    throw std::invalid_argument("integrator tolerances must lie in [1e-15, 1e-3]");
  if (!(max_step > 0))
    throw std::invalid_argument("max_step must be positive");
  if (stride < 1)
    throw std::invalid_argument("stride must be at least 1");
  if (sample_dt < 0)
    throw std::invalid_argument("sample_dt must be non-negative");
}

EventSpec EventSpec::collision(int body, double radius, bool terminal) {
  if (!(radius > 0))
    throw std::invalid_argument("collision radius must be positive");
  EventSpec e;
  e.kind = Kind::collision;
  e.body = body;
  e.radius = radius;
  e.crossing = -1;
  e.terminal = terminal;
  return e;
}

EventSpec EventSpec::plane_crossing(int component, double value, int crossing, bool terminal) {
  if (component < 0 || component > 5)
    throw std::invalid_argument("plane crossing component must be in 0..5");
  EventSpec e;
  e.kind = Kind::plane_crossing;
  e.component = component;
  e.value = value;
  e.crossing = crossing;
  e.terminal = terminal;
  return e;
}

EventSpec EventSpec::custom(std::function<double(double, const State6d&)> g, int crossing,
                            bool terminal) {
  EventSpec e;
  e.kind = Kind::custom;
  e.function = std::move(g);
  e.crossing = crossing;
  e.terminal = terminal;
  return e;
}

double EventSpec::evaluate(const SystemModel& model, double t, const State6d& x) const {
  switch (kind) {
  case Kind::collision:
    return (x.head<3>() - body_position<double>(model, std::size_t(body), t)).norm() - radius;
  case Kind::plane_crossing:
    return x[component] - value;
  case Kind::custom:
    return function(t, x);
  }
  return 0.0;
}

std::vector<EventSpec> collision_events(const SystemModel& model, bool terminal) {
  std::vector<EventSpec> out;
  for (std::size_t j = 0; j < model.massive_count(); ++j) {
    if (j >= 2 && model.epsilon == 0.0)
      continue;
    if (model.body_radii[j] > 0)
      out.push_back(EventSpec::collision(int(j), model.body_radii[j], terminal));
  }
  return out;
}

namespace {

void check_span(const IntegratorSettings& settings, double t0, double t1) {
  settings.validate();
  if (settings.direction) {
    const bool forward = t1 > t0;
    if (forward != (*settings.direction == Direction::forward))
      throw std::invalid_argument("integration direction disagrees with the time span");
  }
}

// Collects samples either per accepted step (with stride) or on a uniform grid.
template <int Dim>
class Sampler {
public:
  using Vec = Eigen::Matrix<double, Dim, 1>;

  Sampler(const IntegratorSettings& s, double t0, double t1, const Vec& y0)
      : stride_(s.stride), dt_(s.sample_dt), t0_(t0), dir_(t1 >= t0 ? 1.0 : -1.0) {
    push(t0, y0);
  }

  template <class Stepper>
  void on_step(Stepper& stepper) {
    if (dt_ > 0) {
      for (;;) {
        const double tn = t0_ + dir_ * dt_ * double(next_ + 1);
        if (dir_ * (tn - stepper.t()) > 0)
          break;
        ++next_;
        push(tn, stepper.dense(tn));
      }
      return;
    }
    if (++count_ % stride_ == 0)
      push(stepper.t(), stepper.y());
  }

  void finish(double t, const Vec& y) {
    if (t_.back() != t)
      push(t, y);
  }

  std::vector<double> t_;
  std::vector<Vec> y_;

private:
  void push(double t, const Vec& y) {
    t_.push_back(t);
    y_.push_back(y);
  }

  int stride_;
  double dt_;
  double t0_;
  double dir_;
  long count_ = 0;
  long next_ = 0;
};

} // namespace

Trajectory integrate(const SystemModel& model, const State6d& state0, double t0, double t1,
                     const IntegratorSettings& settings, const std::vector<EventSpec>& events) {
  check_span(settings, t0, t1);
  if (t1 == t0)
    throw std::invalid_argument("integrate: empty time span");
  if (!state0.allFinite())
    throw std::invalid_argument("integrate: non-finite initial state");

  Trajectory out;
  Sampler<6> sampler(settings, t0, t1, state0);
  long steps = 0;
  double t_last = t0;
  State6d y_last = state0;
  State6d y_term;
  const auto terminal = detail::drive<6>(
      model, detail::state_rhs(model), state0, t0, t1, settings, events, &out.events,
      [&](auto& stepper) {
        ++steps;
        sampler.on_step(stepper);
        t_last = stepper.t();
        y_last = stepper.y();
        return true;
      },
      &y_term);
  if (terminal) {
    out.terminated = true;
    t_last = terminal->t;
    y_last = y_term;
  }
  sampler.finish(t_last, y_last);
  out.t = std::move(sampler.t_);
  out.states = std::move(sampler.y_);
  out.steps = steps;
  return out;
}

TangentTrajectory integrate_with_tangent(const SystemModel& model, const State6d& state0,
                                         const State6d& V0, double t0, double t1,
                                         const IntegratorSettings& settings) {
  check_span(settings, t0, t1);
  if (!(V0.norm() > 0))
    throw std::invalid_argument("integrate_with_tangent: tangent vector must be nonzero");
  if (t1 == t0)
    throw std::invalid_argument("integrate_with_tangent: empty time span");

  using Vec12 = Eigen::Matrix<double, 12, 1>;
  Vec12 y0;
  y0 << state0, V0;
  Sampler<12> sampler(settings, t0, t1, y0);
  double t_last = t0;
  Vec12 y_last = y0;
  detail::drive<12>(model, detail::tangent_rhs(model), y0, t0, t1, settings, {}, nullptr,
                    [&](auto& stepper) {
                      sampler.on_step(stepper);
                      t_last = stepper.t();
                      y_last = stepper.y();
                      return true;
                    });
  sampler.finish(t_last, y_last);

  TangentTrajectory out;
  out.t = std::move(sampler.t_);
  for (const auto& y : sampler.y_) {
    out.states.push_back(y.head<6>());
    out.tangents.push_back(y.tail<6>());
  }
  return out;
}

StmResult stm_propagate(const SystemModel& model, const State6d& state0, double t0, double t1,
                        const IntegratorSettings& settings) {
  settings.validate();
  StmResult out{t0, state0, Mat6d::Identity()};
  if (t1 == t0)
    return out;
  check_span(settings, t0, t1);

  using Vec42 = Eigen::Matrix<double, 42, 1>;
  Vec42 y0;
  y0.head<6>() = state0;
  Eigen::Map<Mat6d>(y0.data() + 6) = Mat6d::Identity();
  Vec42 y_last = y0;
  detail::drive<42>(model, detail::stm_rhs(model), y0, t0, t1, settings, {}, nullptr,
                    [&](auto& stepper) {
                      y_last = stepper.y();
                      return true;
                    });
  out.t = t1;
  out.state = y_last.head<6>();
  out.stm = Eigen::Map<const Mat6d>(y_last.data() + 6);
  return out;
}

namespace {

void write_row(std::ostream& out, double t, const State6d& x) {
  out << t;
  for (int i = 0; i < 6; ++i)
    out << ',' << x[i];
}

} // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto old = out.precision(17);
  out << "t,x,y,z,vx,vy,vz\n";
  for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
    write_row(out, trajectory.t[i], trajectory.states[i]);
    out << '\n';
  }
  out.precision(old);
}

void write_trajectory_csv(std::ostream& out, const TangentTrajectory& trajectory) {
  const auto old = out.precision(17);
  out << "t,x,y,z,vx,vy,vz,V1,V2,V3,V4,V5,V6\n";
  for (std::size_t i = 0; i < trajectory.t.size(); ++i) {
    write_row(out, trajectory.t[i], trajectory.states[i]);
    for (int k = 0; k < 6; ++k)
      out << ',' << trajectory.tangents[i][k];
    out << '\n';
  }
  out.precision(old);
}

} // namespace crnbp
