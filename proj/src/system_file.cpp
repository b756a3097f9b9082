#include "crnbp/system_file.hpp"

#include <cmath>
#include <numbers>

namespace crnbp {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

EphemerisSetup read_ephemeris(const ConfigDocument& doc, const ConfigBlock& block,
                              const std::string& m2, const std::vector<std::string>& others) {
  EphemerisSetup e;
  e.table = doc.resolve(block.text("table"));
  e.jd0 = block.number("jd0");
  e.elements = {block.number_or("inclination_deg", 0.0) * kDeg,
                block.number_or("arg_periapsis_deg", 0.0) * kDeg,
                block.number_or("raan_deg", 0.0) * kDeg};
  e.frame = orbit_frame(e.elements);

  const auto table = load_ephemeris_table(e.table);
  const EphemerisRecord& r2 = find_record(table, m2, e.jd0);
  e.S = s_matrix(e.frame, r2.s_1j);
  e.phases[m2] = 0.0;
  for (const auto& name : others) {
    bool present = false;
    for (const auto& r : table)
      present = present || (r.body == name && std::abs(r.jd - e.jd0) < 1e-9);
    if (!present)
      continue;
    try {
      e.phases[name] = initial_phase(e.frame, r2.s_1j, find_record(table, name, e.jd0).s_1j);
    } catch (const std::invalid_argument& err) {
      block.fail("phase of '" + name + "': " + err.what());
    }
  }
  return e;
}

} // namespace

SystemSetup assemble_system(const ConfigDocument& doc) {
  const ConfigBlock& sys = doc.require("system");
  SystemSetup out;
  out.source = doc.source;
  out.m1 = sys.text("m1");
  out.m2 = sys.text("m2");
  out.others = sys.has("others") ? sys.list("others") : std::vector<std::string>{};
  out.constants = load_constants(doc.resolve(sys.text("constants")));
  const double epsilon = sys.number_or("epsilon", 1.0);

  if (const ConfigBlock* eph = doc.find("ephemeris"))
    out.ephemeris = read_ephemeris(doc, *eph, out.m2, out.others);

  for (const ConfigBlock* o : doc.all("override")) {
    if (o->name.empty())
      o->fail("override block needs a body name");
    if (o->has("period_ratio"))
      out.options.period_ratio[o->name] = o->number("period_ratio");
    if (o->has("psi0_deg"))
      out.options.psi0[o->name] = o->number("psi0_deg") * kDeg;
    if (o->has("collision_offset_km"))
      out.options.collision_offset_km[o->name] = o->number("collision_offset_km");
  }
  if (out.ephemeris)
    for (const auto& [name, psi] : out.ephemeris->phases)
      out.options.psi0.try_emplace(name, psi);

  for (const auto& name : out.others)
    if (!out.options.psi0.count(name))
      sys.fail("no initial phase for '" + name + "' (add an ephemeris row or psi0_deg override)");

  out.model = build_system(out.constants, out.m1, out.m2, out.others, epsilon, out.options);
  return out;
}

SystemSetup load_system(const std::filesystem::path& path) {
  return assemble_system(load_config(path));
}

} // namespace crnbp
