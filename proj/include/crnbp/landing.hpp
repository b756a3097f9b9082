#pragma once

#include "crnbp/propagate.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace crnbp {

/// Backward-in-time construction of landing trajectories onto M2: each start sits
/// `altitude_km` above M2's surface at longitude theta, with the speed fixed by the
/// Jacobi constant of a collinear point and the velocity horizontal and prograde
/// about M2.
struct LandingSpec {
  double arrival_days = 0;   ///< t_a, days after the model epoch
  double duration_days = 30; ///< backward integration span
  double altitude_km = 50;
  std::vector<double> theta_deg = default_thetas();
  int lagrange_index = 1; ///< 0-based; 1 is L2
  /// Output sampling of kept trajectories, days; 0 keeps accepted steps.
  double sample_days = 0.02;
  IntegratorSettings integrator;

  static std::vector<double> default_thetas(); ///< 0, 1, ..., 359
  void validate() const;
};

enum class LandingOutcome { survived, collided, infeasible, failed };
const char* to_string(LandingOutcome outcome);

struct LandingRecord {
  double theta_deg = 0;
  LandingOutcome outcome = LandingOutcome::survived;
  State6d state0 = State6d::Zero();
  double t_start = 0, t_end = 0; ///< canonical; t_end < t_start
  double min_r1 = 0, max_r1 = 0; ///< distance from M1, canonical
  std::string collided_with;
  bool transeuropa = false; ///< max_r1 beyond M2's orbit plus its Hill radius
  Trajectory trajectory;    ///< empty unless survived
};

struct LandingSweep {
  LandingSpec spec;
  double jacobi = 0;          ///< J of the reference collinear point
  double exit_radius = 0;     ///< transeuropa threshold on max_r1
  std::vector<LandingRecord> records;

  std::size_t count(LandingOutcome outcome) const;
};

/// Start state for longitude theta (radians); empty when the Jacobi relation gives
/// a negative squared speed.
std::optional<State6d> landing_state(const SystemModel& model, double theta, double altitude,
                                     double jacobi);

/// Hill radius of M2 in canonical units, (mu2 / 3)^(1/3).
double hill_radius(const SystemModel& model);

LandingSweep landing_sweep(const SystemModel& model, const LandingSpec& spec, int threads = 1);

/// theta_deg,outcome,min_r1,max_r1,transeuropa,t_end,collided_with
void write_landing_summary_csv(std::ostream& out, const LandingSweep& sweep);

} // namespace crnbp
