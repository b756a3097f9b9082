#pragma once

#include "crnbp/bodies.hpp"
#include "crnbp/types.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace crnbp::testing {

inline std::string data_path(const std::string& rel) { return std::string(CRNBP_DATA_DIR) + "/" + rel; }

/// Sun-Jupiter with Venus..Neptune, phases drawn from `rng`.
inline SystemModel solar_model(std::mt19937_64& rng, double epsilon = 1.0) {
  const auto constants = load_constants(data_path("constants/solar_system.txt"));
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  SystemOptions opt;
  for (const char* name : {"Venus", "Earth", "Mars", "Saturn", "Uranus", "Neptune"})
    opt.psi0[name] = angle(rng);
  return build_system(constants, "Sun", "Jupiter",
                      {"Venus", "Earth", "Mars", "Saturn", "Uranus", "Neptune"}, epsilon, opt);
}

/// Jupiter-Ganymede with Io and Europa in the 4:2:1 resonance.
inline SystemModel laplace_model(double epsilon = 1.0) {
  const auto constants = load_constants(data_path("constants/jupiter_system.txt"));
  SystemOptions opt;
  opt.period_ratio["Io"] = 0.25;
  opt.period_ratio["Europa"] = 0.5;
  opt.psi0["Io"] = 0.7;
  opt.psi0["Europa"] = -2.1;
  return build_system(constants, "Jupiter", "Ganymede", {"Io", "Europa"}, epsilon, opt);
}

/// Uniform random state in a box, kept at least `clearance` from every body at time t.
template <class PositionOf>
State6d random_state(std::mt19937_64& rng, double box, double speed, std::size_t bodies,
                     PositionOf&& position_of, double clearance) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    State6d s;
    for (int i = 0; i < 3; ++i)
      s[i] = box * u(rng);
    for (int i = 3; i < 6; ++i)
      s[i] = speed * u(rng);
    bool ok = true;
    for (std::size_t j = 0; j < bodies; ++j)
      if ((s.head<3>() - position_of(j)).norm() < clearance)
        ok = false;
    if (ok)
      return s;
  }
}

} // namespace crnbp::testing
