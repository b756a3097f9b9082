#include "crnbp/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace crnbp {

namespace {

// x-acceleration on the collinear axis with zero velocity.
double collinear_force(double x, double mu1, double mu2) {
  const double a = x + mu2;
  const double b = x - mu1;
  return x - mu1 * a / std::abs(a * a * a) - mu2 * b / std::abs(b * b * b);
}

double collinear_slope(double x, double mu1, double mu2) {
  const double a = std::abs(x + mu2);
  const double b = std::abs(x - mu1);
  return 1.0 + 2.0 * mu1 / (a * a * a) + 2.0 * mu2 / (b * b * b);
}

double collinear_root(double lo, double hi, double mu1, double mu2) {
  double flo = collinear_force(lo, mu1, mu2);
  const double fhi = collinear_force(hi, mu1, mu2);
  if (!(flo < 0 && fhi > 0) && !(flo > 0 && fhi < 0))
    throw std::runtime_error("lagrange_points: collinear root not bracketed");

  for (int i = 0; i < 200 && (hi - lo) > 1e-12 * (1.0 + std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = collinear_force(mid, mu1, mu2);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 8; ++i) {
    const double f = collinear_force(x, mu1, mu2);
    if (f == 0.0)
      break;
    x -= f / collinear_slope(x, mu1, mu2);
  }
  return x;
}

} // namespace

std::array<State6d, 5> lagrange_points(const SystemModel& model) {
  const double mu1 = model.mu1();
  const double mu2 = model.mu2();
  if (!(mu2 > 0 && mu2 < 1))
    throw std::invalid_argument("lagrange_points: mass ratio outside (0, 1)");

  // Each collinear interval holds one root; the force is monotone between poles.
  const double gap = 1e-9 * std::min(1.0, std::cbrt(mu2));
  const double x1 = collinear_root(-mu2 + gap, mu1 - gap, mu1, mu2);
  const double x2 = collinear_root(mu1 + gap, 2.0, mu1, mu2);
  const double x3 = collinear_root(-2.0, -mu2 - gap, mu1, mu2);

  std::array<State6d, 5> points;
  for (auto& p : points)
    p.setZero();
  points[0][0] = x1;
  points[1][0] = x2;
  points[2][0] = x3;
  points[3][0] = 0.5 - mu2;
  points[3][1] = std::sqrt(3.0) / 2.0;
  points[4][0] = 0.5 - mu2;
  points[4][1] = -std::sqrt(3.0) / 2.0;
  return points;
}

} // namespace crnbp
