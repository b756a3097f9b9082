#pragma once

// Periodic orbits: differential correction, monodromy, pseudo-arclength families in
// the autonomous problem and natural-parameter continuation in epsilon.

#include "crnbp/bodies.hpp"
#include "crnbp/propagate.hpp"

#include <json.hpp>

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crnbp {

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class PeriodMode {
  free, ///< autonomous problem; the period is an unknown
  fixed ///< period held at p times the forcing period
};

struct PeriodicOrbitProblem {
  SystemModel model;
  PeriodMode mode = PeriodMode::free;
  int p = 1;
  /// Forcing period; in fixed mode the orbit period is p * forcing_period.
  double forcing_period = 0;
  double tol = 1e-10;
  int max_iterations = 25;
  /// State component held at its guessed value during correction (-1 for none).
  /// Near-Kepler families have O(mu) conditioning and a free corrector can slide to
  /// the equilibrium; pinning the amplitude coordinate prevents that.
  int pinned = -1;
  IntegratorSettings integrator;

  double fixed_period() const { return p * forcing_period; }
};

/// Smallest T > 0 with (n_j - 1) T a multiple of 2 pi for every perturber, found by
/// rational reconstruction of the relative rates. Empty when there is no forcing
/// (no perturbers, epsilon = 0 is not considered) or the rates are incommensurate
/// up to `max_denominator`.
std::optional<double> forcing_period(const SystemModel& model, long max_denominator = 1000);

/// Fixed-period problem for `model`; throws ConfigError if the model is not periodic.
PeriodicOrbitProblem fixed_period_problem(const SystemModel& model, int p);

struct OrbitFamilyMember {
  State6d state0 = State6d::Zero();
  double period = 0;
  double param = 0;
  std::array<std::complex<double>, 6> monodromy_eigs{};
  double closure_residual = 0;
  int iterations = 0;
};

struct MonodromySummary {
  Mat6d matrix;
  std::array<std::complex<double>, 6> eigenvalues;
  double determinant = 0;
  /// max over eigenvalues of the distance from 1/lambda to the nearest eigenvalue
  double reciprocal_residual = 0;
  /// distance of the eigenvalue pair closest to (1, 1)
  double unit_pair_residual = 0;
};

/// Infinity norm of phi_T(X0) - X0.
double closure_residual(const PeriodicOrbitProblem& problem, const State6d& x0, double period);

/// Differential correction. In free mode a phase condition F(X_guess) . (X - X_guess) = 0
/// removes the time-translation direction; in fixed mode the period is held at pT.
/// Linear systems are solved in the minimum-norm least-squares sense, which also
/// absorbs the direction along the family that the Jacobi integral leaves free.
/// Throws ConvergenceError after max_iterations.
OrbitFamilyMember newton_correct(const PeriodicOrbitProblem& problem, const State6d& guess,
                                 double guess_period);

MonodromySummary monodromy(const PeriodicOrbitProblem& problem, const OrbitFamilyMember& member);

struct ContinuationSpec {
  int members = 40;
  double step = 0.02;
  double min_step = 1e-6;
  double max_step = 0.1;
  /// The first tangent (dX0, dT) is oriented to have a non-negative dot product with
  /// this hint; the default follows growing vz0. With a pinned component the first
  /// tangent is the secant to a second member one step along that component.
  Eigen::Matrix<double, 7, 1> hint = Eigen::Matrix<double, 7, 1>::Unit(5);
  /// Optional stop predicate evaluated on every new member.
  std::function<bool(const OrbitFamilyMember&)> stop;
};

struct FamilyResult {
  std::vector<OrbitFamilyMember> members;
  /// unit tangents (dX0, dT) per member, used to restart or bisect along the family
  std::vector<Eigen::Matrix<double, 7, 1>> tangents;
  bool complete = true;
  std::string diagnostic;
};

/// Pseudo-arclength continuation in free mode. member.param holds the arclength.
FamilyResult continue_family(const PeriodicOrbitProblem& problem,
                             const OrbitFamilyMember& first, const ContinuationSpec& spec);

/// Family member with the requested period, bracketed by adjacent members of `family`
/// and located by bisection on the arclength (|T - target| < period_tol).
OrbitFamilyMember member_with_period(const PeriodicOrbitProblem& problem,
                                     const FamilyResult& family, double target,
                                     double period_tol = 1e-10);

/// Small-amplitude vertical oscillation about a collinear point: X0 = L + (0,0,0,0,0,A w_z),
/// period 2 pi / w_z with w_z^2 = mu1/r1^3 + mu2/r2^3.
std::pair<State6d, double> vertical_lyapunov_seed(const SystemModel& model, int lagrange_index,
                                                  double amplitude);

struct EpsilonSpec {
  double first_step = 0.01;
  double min_step = 1e-6;
  double max_step = 0.1;
  /// Phase samples along the epsilon = 0 orbit scanned for a starting point.
  int phase_samples = 72;
  /// Natural steps shorter than this signal a fold; the run then switches to
  /// pseudo-arclength in (X0, epsilon).
  double arclength_below = 1e-4;
  double arc_step = 0.01;
  double arc_max_step = 0.05;
  int max_members = 4000;
};

struct EpsilonResult {
  std::vector<OrbitFamilyMember> members; ///< member.param holds epsilon
  bool complete = true;
  std::string diagnostic;
  double phase_shift = 0; ///< time shift applied to the epsilon = 0 orbit
  /// epsilon = 0 orbit restarted at phase_shift; the first forced member grows from it
  OrbitFamilyMember aligned;
  /// epsilon values where the branch turned back (sign change of d epsilon / ds)
  std::vector<double> folds;
};

/// Pseudo-arclength continuation in (X0, epsilon) from the last two members of `run`,
/// appending members until epsilon = 1 is reached exactly. Used past folds.
void epsilon_arclength(const PeriodicOrbitProblem& problem, const EpsilonSpec& spec,
                       EpsilonResult& run);

/// Natural-parameter continuation from epsilon = 0 to 1 at fixed period pT.
/// The first member is the input unchanged. Because the forced problem selects
/// isolated phases along the unforced orbit, the start is shifted along the orbit to a
/// root of the one-period Jacobi change J(phi) - J(X) evaluated at the first epsilon step.
EpsilonResult continue_epsilon(const PeriodicOrbitProblem& problem,
                               const OrbitFamilyMember& member_at_eps0,
                               const EpsilonSpec& spec = {});

/// Uniformly sampled orbit over one period.
Trajectory sample_orbit(const PeriodicOrbitProblem& problem, const OrbitFamilyMember& member,
                        int samples = 400);

/// One JSON-lines record with provenance.
/// Position distances between two closed orbits, each sampled uniformly over one
/// period with the same number of samples (first == last).
struct OrbitDeformation {
  /// max over time of |x1(t) - x0(t + s)|, minimized over sample shifts s; the
  /// unforced orbit has no preferred phase, so this is the headline number
  double rephased_max = 0;
  double aligned_max = 0; ///< same with s = 0
  double hausdorff = 0;   ///< between the two curves as point sets
};

OrbitDeformation orbit_deformation(const Trajectory& reference, const Trajectory& deformed);

nlohmann::json to_json(const OrbitFamilyMember& member, const PeriodicOrbitProblem& problem);
OrbitFamilyMember member_from_json(const nlohmann::json& j);

} // namespace crnbp
