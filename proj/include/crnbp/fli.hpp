#pragma once

// Fast Lyapunov Indicator: FLI(t) = sup over tau <= t of log |V(tau)|, with V
// carried by the variational equation along the trajectory.

#include "crnbp/bodies.hpp"
#include "crnbp/propagate.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <vector>

namespace crnbp {

/// Eccentric anomaly solving E - e sin E = M (Newton, |dE| < tol).
double solve_kepler(double mean_anomaly, double e, double tol = 1e-13);

/// Planar M1-centred osculating elements (gravitational parameter mu1 + mu2 = 1)
/// placed at mean anomaly `mean_anomaly` with periapsis longitude `varpi`, both
/// measured from the M1-M2 line at t = 0, mapped to the synodic frame.
State6d elements_to_state(const SystemModel& model, double a, double e, double mean_anomaly,
                          double varpi = 0.0);

/// Planar Tisserand parameter with respect to a perturber on a circular orbit of radius a_p.
double tisserand(double a_p, double a, double e);

/// Points (a, e) with tisserand(a_p, a, e) = value, for e sampled on [e_min, e_max].
/// Two branches (inside and outside a_p); empty when no solution exists.
struct TisserandCurve {
  std::vector<Eigen::Vector2d> inner, outer;
};
TisserandCurve tisserand_curve(double a_p, double value, double e_min, double e_max,
                               int samples = 200);

enum class CellStatus { ok = 0, collided = 1, singular = 2, failed = 3 };
const char* to_string(CellStatus status);

struct FliSettings {
  IntegratorSettings integrator;
  State6d V0 = State6d::Constant(1.0 / std::sqrt(6.0));
  /// Running maxima are stored at this many equally spaced fractions of the horizon.
  int checkpoints = 10;
  /// Renormalize V when its norm passes this bound (the equation is linear in V).
  double renormalize_above = 1e50;
  bool stop_on_collision = true;
};

struct FliResult {
  double value = 0;
  CellStatus status = CellStatus::ok;
  double t_end = 0;
  /// checkpoint k holds the supremum over accepted steps up to horizon (k + 1) / checkpoints.
  std::vector<double> running_max;
};

FliResult fli_of(const SystemModel& model, const State6d& state0, double horizon,
                 const FliSettings& settings = {});

struct GridSpec {
  double a_min = 0.5, a_max = 3.0;
  int n_a = 50;
  double e_min = 0.0, e_max = 0.6;
  int n_e = 50;
  double horizon = 1.0;
  double mean_anomaly = 0.0;
  double varpi = 0.0;
  double epoch_jd = 0.0;

  void validate() const;
  double a_at(int i) const;
  double e_at(int j) const;
};

struct FliGrid {
  GridSpec spec;
  /// n_e rows by n_a columns.
  Eigen::MatrixXd values;
  std::vector<CellStatus> status;           ///< row-major, n_e * n_a
  std::vector<std::vector<double>> running; ///< per cell, same order as status

  CellStatus status_at(int j, int i) const { return status[std::size_t(j) * spec.n_a + i]; }
};

/// Cells are independent; the result does not depend on `threads` or scheduling.
/// `progress` (may be empty) is called from worker threads with the number of finished cells.
FliGrid scan(const SystemModel& model, const GridSpec& spec, const FliSettings& settings,
             int threads = 1, const std::function<void(int)>& progress = {});

/// Matrix CSV: header "e\a,a_0,...", then one row per eccentricity.
void write_grid_csv(std::ostream& out, const FliGrid& grid);
/// Same layout holding integer status codes.
void write_status_csv(std::ostream& out, const FliGrid& grid);
/// Long CSV "branch,a,e".
void write_tisserand_csv(std::ostream& out, const TisserandCurve& curve);

} // namespace crnbp
