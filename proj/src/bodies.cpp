#include "crnbp/bodies.hpp"

#include "crnbp/config.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace crnbp {

std::vector<BodyConstants> parse_constants(std::istream& in, const std::string& source) {
  const auto doc = parse_config(in, source);
  std::vector<BodyConstants> out;
  std::set<std::string> seen;
  for (const auto& block : doc.blocks) {
    if (block.kind != "body")
      block.fail("unexpected block [" + block.kind + "], expected [body <name>]");
    if (block.name.empty())
      block.fail("[body] block without a name");
    if (!seen.insert(block.name).second)
      block.fail("duplicate body '" + block.name + "'");

    BodyConstants b;
    b.name = block.name;
    b.center = block.text_or("center", "");
    b.gm = block.number("gm");
    b.radius = block.number("radius");
    // A root body has nothing to orbit.
    b.orbit_radius = b.center.empty() ? block.number_or("orbit_radius", 0.0)
                                      : block.number("orbit_radius");
    b.period = block.number("period");
    b.retrograde = block.flag_or("retrograde", false);

    if (!(b.gm > 0))
      block.fail("gm must be positive", block.find("gm")->line);
    if (!(b.radius >= 0))
      block.fail("radius must be non-negative", block.find("radius")->line);
    if (!(b.orbit_radius >= 0))
      block.fail("orbit_radius must be non-negative", block.find("orbit_radius")->line);
    if (!b.center.empty() && b.center == b.name)
      block.fail("body cannot orbit itself");
    if (!(b.period > 0))
      block.fail("period must be positive", block.find("period")->line);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<BodyConstants> load_constants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open constants file '" + path.string() + "'");
  return parse_constants(in, path.string());
}

int SystemModel::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name)
      return static_cast<int>(i);
  return -1;
}

SystemModel build_system(const std::vector<BodyConstants>& constants, const std::string& m1,
                         const std::string& m2, const std::vector<std::string>& others,
                         double epsilon, const SystemOptions& options) {
  auto lookup = [&](const std::string& name) -> const BodyConstants& {
    for (const auto& b : constants)
      if (b.name == name)
        return b;
    throw ConfigError("unknown body '" + name + "'");
  };

  std::vector<std::string> selected{m1, m2};
  selected.insert(selected.end(), others.begin(), others.end());
  std::set<std::string> unique(selected.begin(), selected.end());
  if (unique.size() != selected.size())
    throw ConfigError("a body is listed twice in the system assembly");

  const auto& b1 = lookup(m1);
  const auto& b2 = lookup(m2);
  if (b2.center != m1)
    throw ConfigError("'" + m2 + "' does not orbit '" + m1 + "'");
  for (const auto& name : selected) {
    const auto& b = lookup(name);
    if (name != m1 && b.center != m1)
      throw ConfigError("'" + name + "' does not orbit '" + m1 + "'");
    if (b.gm > b1.gm)
      throw ConfigError("'" + m1 + "' must have the largest gm of the selected bodies");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ConfigError("epsilon must lie in [0, 1]");

  auto period_of = [&](const BodyConstants& b) {
    if (auto it = options.period_ratio.find(b.name); it != options.period_ratio.end())
      return it->second * b2.period;
    return b.period;
  };

  SystemModel m;
  m.epsilon = epsilon;
  m.length_unit = b2.orbit_radius;
  m.time_unit = b2.period / (2.0 * std::numbers::pi);
  const double gm12 = b1.gm + b2.gm;

  for (const auto& name : selected) {
    const auto& b = lookup(name);
    m.names.push_back(name);
    m.mu.push_back(b.gm / gm12);
    double offset = 0.0;
    if (auto it = options.collision_offset_km.find(name); it != options.collision_offset_km.end())
      offset = it->second;
    m.body_radii.push_back((b.radius + offset) / m.length_unit);
    if (name == m1) {
      m.R.push_back(0.0);
      m.n.push_back(0.0);
      m.psi0.push_back(0.0);
      continue;
    }
    if (name == m2) {
      m.R.push_back(1.0);
      m.n.push_back(1.0);
      m.psi0.push_back(0.0);
      continue;
    }
    m.R.push_back(b.orbit_radius / m.length_unit);
    const double rate = (2.0 * std::numbers::pi / period_of(b)) * m.time_unit;
    m.n.push_back(b.retrograde ? -rate : rate);
    const auto it = options.psi0.find(name);
    m.psi0.push_back(it == options.psi0.end() ? 0.0 : it->second);
  }
  // mu1 + mu2 = 1 up to rounding; pin it exactly.
  m.mu[0] = 1.0 - m.mu[1];
  validate(m);
  return m;
}

SystemModel make_cr3bp(double mu2) {
  SystemModel m;
  m.names = {"M1", "M2"};
  m.mu = {1.0 - mu2, mu2};
  m.R = {0.0, 1.0};
  m.n = {0.0, 1.0};
  m.psi0 = {0.0, 0.0};
  m.body_radii = {0.0, 0.0};
  m.epsilon = 0.0;
  validate(m);
  return m;
}

void validate(const SystemModel& m) {
  const std::size_t k = m.mu.size();
  if (k < 2)
    throw ConfigError("a system needs at least the two primaries (N >= 3)");
  if (m.R.size() != k || m.n.size() != k || m.psi0.size() != k || m.body_radii.size() != k ||
      (!m.names.empty() && m.names.size() != k))
    throw ConfigError("per-body vectors of the system model differ in length");
  for (double mu : m.mu)
    if (!(mu > 0))
      throw ConfigError("mass parameters must be positive");
  if (std::abs(m.mu[0] + m.mu[1] - 1.0) > 1e-15)
    throw ConfigError("mu1 + mu2 must equal 1");
  if (m.R[0] != 0.0 || m.R[1] != 1.0 || m.psi0[1] != 0.0 || m.n[1] != 1.0)
    throw ConfigError("canonical normalization violated (R1 = 0, R2 = 1, psi02 = 0, n2 = 1)");
  if (!(m.epsilon >= 0.0 && m.epsilon <= 1.0))
    throw ConfigError("epsilon must lie in [0, 1]");
  if (!(m.length_unit > 0) || !(m.time_unit > 0))
    throw ConfigError("units must be positive");
  for (std::size_t j = 2; j < k; ++j)
    if (!(m.R[j] > 0))
      throw ConfigError("perturbing bodies need a positive orbit radius");
}

SystemModel with_epsilon(SystemModel model, double epsilon) {
  model.epsilon = epsilon;
  validate(model);
  return model;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  void number(double v) { bytes(&v, sizeof v); }
  void vec(const std::vector<double>& v) {
    const std::uint64_t n = v.size();
    bytes(&n, sizeof n);
    for (double x : v)
      number(x);
  }
};

} // namespace

std::uint64_t model_hash(const SystemModel& m) {
  Fnv1a f;
  for (const auto& n : m.names)
    f.bytes(n.data(), n.size() + 1);
  f.vec(m.mu);
  f.vec(m.R);
  f.vec(m.n);
  f.vec(m.psi0);
  f.vec(m.body_radii);
  f.number(m.epsilon);
  f.number(m.length_unit);
  f.number(m.time_unit);
  f.number(m.singularity_floor);
  return f.h;
}

std::string model_hash_hex(const SystemModel& model) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << model_hash(model);
  return os.str();
}

} // namespace crnbp
