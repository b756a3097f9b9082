#pragma once

#include "crnbp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace crnbp {

/// Physical constants of one body, SI-like units (km, s).
struct BodyConstants {
  std::string name;
  /// Body this one orbits; empty for a root body.
  std::string center;
  double gm = 0;           ///< km^3/s^2
  double radius = 0;       ///< km
  double orbit_radius = 0; ///< km, about `center`
  double period = 0;       ///< s
  bool retrograde = false;
};

std::vector<BodyConstants> parse_constants(std::istream& in, const std::string& source);
std::vector<BodyConstants> load_constants(const std::filesystem::path& path);

/// Circular restricted n-body configuration in canonical units.
///
/// Index 0 is M1, index 1 is M2 and indices 2.. are the perturbing bodies, so
/// every per-body vector has N-1 entries. In canonical units R[0] = 0,
/// R[1] = 1, psi0[1] = 0 and n[1] = 1.
struct SystemModel {
  std::vector<std::string> names;
  std::vector<double> mu;
  std::vector<double> R;
  std::vector<double> n;
  std::vector<double> psi0;
  double epsilon = 1.0;
  double length_unit = 1.0; ///< km per canonical distance unit
  double time_unit = 1.0;   ///< s per canonical time unit
  std::vector<double> body_radii;
  double singularity_floor = 1e-12;

  std::size_t massive_count() const { return mu.size(); }
  std::size_t perturber_count() const { return mu.size() > 2 ? mu.size() - 2 : 0; }
  double mu1() const { return mu[0]; }
  double mu2() const { return mu[1]; }
  /// Index of the named body, or -1.
  int index_of(const std::string& name) const;
};

struct SystemOptions {
  /// Period of a body as a multiple of M2's period; overrides the constants.
  std::map<std::string, double> period_ratio;
  /// Initial phase in radians, for bodies without ephemeris data.
  std::map<std::string, double> psi0;
  /// Extra collision altitude in km added to the physical radius.
  std::map<std::string, double> collision_offset_km;
};

SystemModel build_system(const std::vector<BodyConstants>& constants, const std::string& m1,
                         const std::string& m2, const std::vector<std::string>& others,
                         double epsilon, const SystemOptions& options = {});

/// Plain CR3BP with the given mass ratio (unit length and time).
SystemModel make_cr3bp(double mu2);

/// Throws ConfigError when an invariant of the model does not hold.
void validate(const SystemModel& model);

SystemModel with_epsilon(SystemModel model, double epsilon);

/// Stable FNV-1a digest of every field that influences the dynamics.
std::uint64_t model_hash(const SystemModel& model);
std::string model_hash_hex(const SystemModel& model);

} // namespace crnbp
