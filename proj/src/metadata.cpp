#include "crnbp/metadata.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#ifndef CRNBP_VERSION
#define CRNBP_VERSION "unknown"
#endif

namespace crnbp {

std::string toolkit_version() { return CRNBP_VERSION; }

nlohmann::json to_json(const SystemModel& m) {
  return {{"bodies", m.names},
          {"mu", m.mu},
          {"R", m.R},
          {"n", m.n},
          {"psi0", m.psi0},
          {"epsilon", m.epsilon},
          {"length_unit_km", m.length_unit},
          {"time_unit_s", m.time_unit},
          {"collision_radii", m.body_radii},
          {"hash", model_hash_hex(m)}};
}

nlohmann::json to_json(const IntegratorSettings& s) {
  nlohmann::json j = {{"method", "DOP853"},
                      {"rel_tol", s.rel_tol},
                      {"abs_tol", s.abs_tol},
                      {"max_steps", s.max_steps}};
  if (std::isfinite(s.max_step))
    j["max_step"] = s.max_step;
  return j;
}

nlohmann::json provenance(const SystemModel& model, const IntegratorSettings& settings) {
  return {{"toolkit_version", toolkit_version()},
          {"model", to_json(model)},
          {"integrator", to_json(settings)}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::filesystem::path sidecar_path(const std::filesystem::path& artifact) {
  return artifact.string() + ".meta.json";
}

} // namespace crnbp
