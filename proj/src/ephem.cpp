#include "crnbp/ephem.hpp"

#include "crnbp/config.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crnbp {

OrbitFrame orbit_frame(const MeanElements& el) {
  const double si = std::sin(el.inclination), ci = std::cos(el.inclination);
  const double sO = std::sin(el.raan), cO = std::cos(el.raan);
  const double sw = std::sin(el.arg_periapsis), cw = std::cos(el.arg_periapsis);

  OrbitFrame f;
  f.elements = el;
  f.h2_hat = Vec3d(si * sO, -si * cO, ci);
  f.e2_hat = Vec3d(cw * cO - sw * sO * ci, cw * sO + sw * cO * ci, sw * si);
  f.e2perp_hat = f.h2_hat.cross(f.e2_hat);
  return f;
}

Vec3d project_to_plane(const OrbitFrame& frame, const Vec3d& s) {
  return s.dot(frame.e2_hat) * frame.e2_hat + s.dot(frame.e2perp_hat) * frame.e2perp_hat;
}

double initial_phase(const OrbitFrame& frame, const Vec3d& s_12, const Vec3d& s_1j) {
  const Vec3d p2 = project_to_plane(frame, s_12);
  const Vec3d pj = project_to_plane(frame, s_1j);
  const double tiny = 1e-12;
  if (p2.norm() <= tiny * s_12.norm() || pj.norm() <= tiny * s_1j.norm() || pj.norm() == 0.0)
    throw std::invalid_argument("initial_phase: projection onto M2's orbital plane degenerates");
  if (frame.h2_hat.z() == 0.0)
    throw std::invalid_argument("initial_phase: M2's orbital plane contains the fixed z axis");
  // Two-argument form: the numerator is (p2 x pj).z and the denominator (h2.z)(p2.pj).
  // Dividing both by h2.z keeps the quotient of the printed formula and resolves the
  // quadrant for either orientation of the fixed z axis.
  const double num = p2.cross(pj).z() / frame.h2_hat.z();
  const double den = p2.dot(pj);
  return std::atan2(num, den);
}

Mat3d s_matrix(const OrbitFrame& frame, const Vec3d& s_12) {
  const Vec3d p = project_to_plane(frame, s_12);
  if (p.norm() <= 1e-12 * s_12.norm() || p.norm() == 0.0)
    throw std::invalid_argument("s_matrix: projection of s_12 degenerates");
  const Vec3d S1 = p.normalized();
  const Vec3d S2 = frame.h2_hat.cross(S1);
  Mat3d S;
  S.row(0) = S1.transpose();
  S.row(1) = S2.transpose();
  S.row(2) = frame.h2_hat.transpose();
  return S;
}

Mat3d t_matrix(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Mat3d T;
  T << c, s, 0, -s, c, 0, 0, 0, 1;
  return T;
}

Mat3d t_dot_matrix(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Mat3d Td;
  Td << -s, c, 0, -c, -s, 0, 0, 0, 0;
  return Td;
}

State6d fixed_to_synodic(const Mat3d& S, double mu2, double t_n, const Vec3d& s_1n,
                         const Vec3d& v_1n) {
  const Mat3d T = t_matrix(t_n);
  const Mat3d Td = t_dot_matrix(t_n);
  const Vec3d x_hat = Vec3d::UnitX();
  // Idealized M1-M2 geometry: s_12 = S^T T^T x, s_12' = -S^T T^T T' T^T x.
  const Vec3d s12 = S.transpose() * T.transpose() * x_hat;
  const Vec3d v12 = -(S.transpose() * T.transpose() * Td * T.transpose() * x_hat);
  const Vec3d p = s_1n - mu2 * s12;
  const Vec3d pd = v_1n - mu2 * v12;
  State6d out;
  out.head<3>() = T * S * p;
  out.tail<3>() = Td * S * p + T * S * pd;
  return out;
}

State6d synodic_to_fixed(const Mat3d& S, double mu2, double t_n, const State6d& synodic) {
  const Mat3d T = t_matrix(t_n);
  const Mat3d Td = t_dot_matrix(t_n);
  const Mat3d TS = T * S;
  const Vec3d x_hat = Vec3d::UnitX();
  const Vec3d s12 = S.transpose() * T.transpose() * x_hat;
  const Vec3d v12 = -(S.transpose() * T.transpose() * Td * T.transpose() * x_hat);
  const Vec3d p = TS.transpose() * synodic.head<3>();
  const Vec3d pd = TS.transpose() * (synodic.tail<3>() - Td * S * p);
  State6d out;
  out.head<3>() = p + mu2 * s12;
  out.tail<3>() = pd + mu2 * v12;
  return out;
}

double t_n_from_jd(double jd, double jd0, double n12_si) { return 86400.0 * (jd - jd0) * n12_si; }

std::vector<EphemerisRecord> parse_ephemeris_table(std::istream& in, const std::string& source) {
  std::vector<EphemerisRecord> out;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    if (trim(raw).empty())
      continue;
    std::istringstream ls(raw);
    EphemerisRecord r;
    ls >> r.jd >> r.body >> r.s_1j.x() >> r.s_1j.y() >> r.s_1j.z() >> r.v_1j.x() >> r.v_1j.y() >>
        r.v_1j.z();
    std::string extra;
    if (!ls || (ls >> extra))
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": expected 'jd body x y z vx vy vz'");
    if (!(r.s_1j.norm() > 0))
      throw ConfigError(source + ":" + std::to_string(line_no) + ": zero position for '" +
                        r.body + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EphemerisRecord> load_ephemeris_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open ephemeris table '" + path.string() + "'");
  return parse_ephemeris_table(in, path.string());
}

const EphemerisRecord& find_record(const std::vector<EphemerisRecord>& table,
                                   const std::string& body, double jd) {
  for (const auto& r : table)
    if (r.body == body && std::abs(r.jd - jd) < 1e-9)
      return r;
  throw ConfigError("ephemeris table has no record for '" + body + "' at JD " +
                    std::to_string(jd));
}

} // namespace crnbp
