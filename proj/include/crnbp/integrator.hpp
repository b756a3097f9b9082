#pragma once

// Adaptive Dormand-Prince 8(5,3) stepper with its 7th-order continuous extension.
// Works in either time direction; the step-size controller follows Hairer's
// DOP853 (mixed 5th/3rd order error estimate, RMS norm, safety 0.9).

#include "crnbp/dop853_coefficients.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace crnbp {

class IntegrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class StepSizeUnderflow : public IntegrationError {
public:
  explicit StepSizeUnderflow(double t)
      : IntegrationError("step size underflow at t = " + std::to_string(t)) {}
};

class MaxStepsExceeded : public IntegrationError {
public:
  explicit MaxStepsExceeded(double t)
      : IntegrationError("maximum number of steps exceeded at t = " + std::to_string(t)) {}
};

struct StepperSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 5'000'000;
};

template <int Dim, class Rhs>
class Dop853 {
public:
  using Vec = Eigen::Matrix<double, Dim, 1>;

  Dop853(Rhs rhs, double t0, const Vec& y0, double t_bound, const StepperSettings& settings)
      : rhs_(std::move(rhs)), settings_(settings), t_(t0), t_bound_(t_bound), y_(y0) {
    if (!(settings.rel_tol > 0) || !(settings.abs_tol > 0))
      throw std::invalid_argument("tolerances must be positive");
    direction_ = t_bound >= t0 ? 1.0 : -1.0;
    f_ = rhs_(t_, y_);
    h_abs_ = initial_step();
  }

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  const Vec& y() const { return y_; }
  const Vec& y_old() const { return y_old_; }
  const Vec& f() const { return f_; }
  double direction() const { return direction_; }
  bool finished() const { return direction_ * (t_ - t_bound_) >= 0.0; }
  long steps() const { return steps_; }
  long evaluations() const { return evaluations_; }

  /// Advances by one accepted step (clipped at t_bound).
  void step() {
    if (++steps_ > settings_.max_steps)
      throw MaxStepsExceeded(t_);
    const double min_step =
        10.0 * std::abs(std::nextafter(t_, direction_ * std::numeric_limits<double>::infinity()) - t_);
    double h_abs = std::clamp(h_abs_, min_step, settings_.max_step);
    bool rejected = false;

    for (;;) {
      if (h_abs < min_step)
        throw StepSizeUnderflow(t_);
      double t_new = t_ + direction_ * h_abs;
      if (direction_ * (t_new - t_bound_) > 0)
        t_new = t_bound_;
      const double h = t_new - t_;
      h_abs = std::abs(h);

      const Vec y_new = stage_sweep(h);
      const Vec f_new = rhs_(t_new, y_new);
      ++evaluations_;
      k_[dop853::kStages] = f_new;

      const double err = error_norm(h, y_new);
      if (err < 1.0) {
        double factor = err == 0.0 ? kMaxFactor
                                   : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
        if (rejected)
          factor = std::min(1.0, factor);
        h_abs_ = h_abs * factor;

        t_old_ = t_;
        y_old_ = y_;
        f_old_ = f_;
        h_prev_ = h;
        t_ = t_new;
        y_ = y_new;
        f_ = f_new;
        dense_ready_ = false;
        return;
      }
      h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent));
      rejected = true;
    }
  }

  /// Multiplies components [first, Dim) of the solution by `factor`. Only valid when
  /// those components obey a linear homogeneous equation that does not feed back into
  /// the others (tangent vectors), so every stored stage scales the same way.
  void scale_tail(int first, double factor) {
    const int count = int(y_.size()) - first;
    for (Vec* v : {&y_, &y_old_, &f_, &f_old_})
      v->segment(first, count) *= factor;
    for (auto& k : k_)
      if (k.size() == y_.size())
        k.segment(first, count) *= factor;
    if (dense_ready_)
      for (auto& F : F_)
        F.segment(first, count) *= factor;
  }

  /// Evaluates the continuous extension of the last accepted step at t.
  Vec dense(double t) {
    if (!dense_ready_)
      build_dense();
    const double x = (t - t_old_) / h_prev_;
    Vec y = Vec::Zero(y_.size());
    for (int i = 6; i >= 0; --i) {
      y += F_[i];
      if ((6 - i) % 2 == 0)
        y *= x;
      else
        y *= (1.0 - x);
    }
    return y + y_old_;
  }

private:
  static constexpr double kSafety = 0.9;
  static constexpr double kMinFactor = 0.2;
  static constexpr double kMaxFactor = 10.0;
  static constexpr double kErrorExponent = -1.0 / 8.0;

  Vec stage_sweep(double h) {
    k_[0] = f_;
    for (int s = 1; s < dop853::kStages; ++s) {
      Vec dy = Vec::Zero(y_.size());
      for (int j = 0; j < s; ++j)
        if (dop853::a[s][j] != 0.0)
          dy += dop853::a[s][j] * k_[j];
      k_[s] = rhs_(t_ + dop853::c[s] * h, y_ + h * dy);
      ++evaluations_;
    }
    Vec incr = Vec::Zero(y_.size());
    for (int j = 0; j < dop853::kStages; ++j)
      if (dop853::b[j] != 0.0)
        incr += dop853::b[j] * k_[j];
    return y_ + h * incr;
  }

  double error_norm(double h, const Vec& y_new) const {
    Vec err5 = Vec::Zero(y_.size());
    Vec err3 = Vec::Zero(y_.size());
    for (int j = 0; j <= dop853::kStages; ++j) {
      if (dop853::e5[j] != 0.0)
        err5 += dop853::e5[j] * k_[j];
      if (dop853::e3[j] != 0.0)
        err3 += dop853::e3[j] * k_[j];
    }
    const Vec scale =
        (settings_.abs_tol + y_.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array() * settings_.rel_tol)
            .matrix();
    const double n5 = err5.cwiseQuotient(scale).squaredNorm();
    const double n3 = err3.cwiseQuotient(scale).squaredNorm();
    if (n5 == 0.0 && n3 == 0.0)
      return 0.0;
    const double denom = n5 + 0.01 * n3;
    return std::abs(h) * n5 / std::sqrt(denom * double(y_.size()));
  }

  void build_dense() {
    const double h = h_prev_;
    for (int s = dop853::kStages + 1; s < dop853::kStagesExtended; ++s) {
      Vec dy = Vec::Zero(y_.size());
      for (int j = 0; j < s; ++j)
        if (dop853::a[s][j] != 0.0)
          dy += dop853::a[s][j] * k_[j];
      k_[s] = rhs_(t_old_ + dop853::c[s] * h, y_old_ + h * dy);
      ++evaluations_;
    }
    const Vec delta = y_ - y_old_;
    F_[0] = delta;
    F_[1] = h * f_old_ - delta;
    F_[2] = 2.0 * delta - h * (f_ + f_old_);
    for (int i = 0; i < 4; ++i) {
      Vec acc = Vec::Zero(y_.size());
      for (int j = 0; j < dop853::kStagesExtended; ++j)
        if (dop853::d[i][j] != 0.0)
          acc += dop853::d[i][j] * k_[j];
      F_[3 + i] = h * acc;
    }
    dense_ready_ = true;
  }

  double initial_step() {
    // Hairer's starting step heuristic.
    const Vec scale =
        (settings_.abs_tol + y_.cwiseAbs().array() * settings_.rel_tol).matrix();
    const double span = std::abs(t_bound_ - t_);
    if (span == 0.0)
      return 0.0;
    const double d0 = y_.cwiseQuotient(scale).norm() / std::sqrt(double(y_.size()));
    const double d1 = f_.cwiseQuotient(scale).norm() / std::sqrt(double(y_.size()));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const Vec y1 = y_ + direction_ * h0 * f_;
    const Vec f1 = rhs_(t_ + direction_ * h0, y1);
    ++evaluations_;
    const double d2 = (f1 - f_).cwiseQuotient(scale).norm() / std::sqrt(double(y_.size())) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15)
                          ? std::max(1e-6, h0 * 1e-3)
                          : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    return std::min({100.0 * h0, h1, span, settings_.max_step});
  }

  Rhs rhs_;
  StepperSettings settings_;
  double direction_ = 1.0;
  double t_;
  double t_bound_;
  double t_old_ = 0;
  double h_abs_ = 0;
  double h_prev_ = 0;
  Vec y_;
  Vec y_old_;
  Vec f_;
  Vec f_old_;
  std::array<Vec, dop853::kStagesExtended> k_;
  std::array<Vec, 7> F_;
  bool dense_ready_ = false;
  long steps_ = 0;
  long evaluations_ = 0;
};

} // namespace crnbp
