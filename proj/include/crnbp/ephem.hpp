#pragma once

// Correspondence between an ephemerides fixed frame centred on M1 and the
// synodic frame of the circular coplanar model.

#include "crnbp/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace crnbp {

struct EphemerisRecord {
  std::string body;
  Vec3d s_1j; ///< km, relative to M1
  Vec3d v_1j; ///< km/s
  double jd = 0;
};

/// Mean orbital elements of M2 in the fixed frame, radians.
struct MeanElements {
  double inclination = 0;
  double arg_periapsis = 0;
  double raan = 0;
};

/// Orthonormal triad attached to M2's mean orbit.
struct OrbitFrame {
  Vec3d h2_hat;     ///< angular momentum direction
  Vec3d e2_hat;     ///< Runge-Lenz-Laplace direction
  Vec3d e2perp_hat; ///< h2 x e2
  MeanElements elements;
};

OrbitFrame orbit_frame(const MeanElements& elements);

/// Component of s in M2's orbital plane.
Vec3d project_to_plane(const OrbitFrame& frame, const Vec3d& s);

/// Initial phase of body j measured from M2 within M2's orbital plane, in (-pi, pi].
/// Throws std::invalid_argument when either projection degenerates.
double initial_phase(const OrbitFrame& frame, const Vec3d& s_12, const Vec3d& s_1j);

/// Rotation from the ephemerides frame to the fixed frame aligned with the synodic
/// frame at t = 0 (rows S1, S2, S3).
Mat3d s_matrix(const OrbitFrame& frame, const Vec3d& s_12);

/// Rotation from that aligned fixed frame to the synodic frame at canonical time t.
Mat3d t_matrix(double t);
/// Time derivative of t_matrix (n12 = 1).
Mat3d t_dot_matrix(double t);

/// Particle state relative to M1 in the ephemerides frame (canonical units) to a
/// synodic state at canonical time t_n.
State6d fixed_to_synodic(const Mat3d& S, double mu2, double t_n, const Vec3d& s_1n,
                         const Vec3d& v_1n);
/// Inverse of fixed_to_synodic: returns (s_1N, v_1N) stacked.
State6d synodic_to_fixed(const Mat3d& S, double mu2, double t_n, const State6d& synodic);

/// Canonical time of an epoch: 86400 (jd - jd0) n12, with n12 in rad/s.
double t_n_from_jd(double jd, double jd0, double n12_si);

/// Reads "jd body x y z vx vy vz" rows; '#' starts a comment.
std::vector<EphemerisRecord> parse_ephemeris_table(std::istream& in, const std::string& source);
std::vector<EphemerisRecord> load_ephemeris_table(const std::filesystem::path& path);

/// Record of `body` at `jd` (exact match within 1e-9 days); throws ConfigError if absent.
const EphemerisRecord& find_record(const std::vector<EphemerisRecord>& table,
                                   const std::string& body, double jd);

} // namespace crnbp
