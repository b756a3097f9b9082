#pragma once

// System assembly files tie a constants file, the choice of primaries and an
// optional ephemeris epoch together:
//
//   [system]
//   constants = ../constants/solar_system.txt
//   m1 = Sun
//   m2 = Jupiter
//   others = Venus, Earth, Mars, Saturn, Uranus, Neptune
//   epsilon = 1
//
//   [ephemeris]                  # optional; gives the initial phases
//   table = ../ephem/solar_2012-09-30.tbl
//   jd0 = 2456200.5
//   inclination_deg = 1.30439695 # mean elements of m2 in the table frame
//   arg_periapsis_deg = -85.74542926
//   raan_deg = 100.47390909
//
//   [override Io]                # optional, one block per body
//   period_ratio = 0.25          # period as a multiple of m2's
//   psi0_deg = 10                # wins over the ephemeris phase
//   collision_offset_km = 50

#include "crnbp/bodies.hpp"
#include "crnbp/config.hpp"
#include "crnbp/ephem.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crnbp {

struct EphemerisSetup {
  std::filesystem::path table;
  double jd0 = 0;
  MeanElements elements;
  OrbitFrame frame;
  Mat3d S = Mat3d::Identity();
  /// Initial phases derived from the table, radians.
  std::map<std::string, double> phases;
};

struct SystemSetup {
  std::filesystem::path source;
  std::string m1, m2;
  std::vector<std::string> others;
  std::vector<BodyConstants> constants;
  SystemOptions options;
  std::optional<EphemerisSetup> ephemeris;
  SystemModel model;
};

SystemSetup assemble_system(const ConfigDocument& doc);
SystemSetup load_system(const std::filesystem::path& path);

} // namespace crnbp
