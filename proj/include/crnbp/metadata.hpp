#pragma once

// JSON sidecars that travel with every artifact.

#include "crnbp/bodies.hpp"
#include "crnbp/propagate.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace crnbp {

std::string toolkit_version();

nlohmann::json to_json(const SystemModel& model);
nlohmann::json to_json(const IntegratorSettings& settings);

/// Common header: toolkit version, model description and hash, integrator settings.
nlohmann::json provenance(const SystemModel& model, const IntegratorSettings& settings);

/// Writes `doc` pretty-printed; throws std::runtime_error if the file cannot be written.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// `<path>.meta.json` next to an artifact.
std::filesystem::path sidecar_path(const std::filesystem::path& artifact);

} // namespace crnbp
