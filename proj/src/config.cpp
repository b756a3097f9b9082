#include "crnbp/config.hpp"

#include "crnbp/types.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace crnbp {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

namespace {

double parse_double(const std::string& text, bool& ok) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  ok = end != begin && *end == '\0' && errno != ERANGE;
  return v;
}

} // namespace

const ConfigEntry* ConfigBlock::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key)
      return &e;
  return nullptr;
}

void ConfigBlock::fail(const std::string& msg, int at_line) const {
  throw ConfigError(source + ":" + std::to_string(at_line > 0 ? at_line : line) + ": " + msg);
}

const std::string& ConfigBlock::text(const std::string& key) const {
  const auto* e = find(key);
  if (!e)
    fail("[" + kind + (name.empty() ? "" : " " + name) + "] missing required field '" + key + "'");
  return e->value;
}

std::string ConfigBlock::text_or(const std::string& key, const std::string& fallback) const {
  const auto* e = find(key);
  return e ? e->value : fallback;
}

double ConfigBlock::number(const std::string& key) const {
  const auto& raw = text(key);
  bool ok = false;
  const double v = parse_double(raw, ok);
  if (!ok)
    fail("field '" + key + "' is not a number: '" + raw + "'", find(key)->line);
  return v;
}

double ConfigBlock::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long ConfigBlock::integer(const std::string& key) const {
  const auto& raw = text(key);
  char* end = nullptr;
  const long v = std::strtol(raw.c_str(), &end, 10);
  if (raw.empty() || *end != '\0')
    fail("field '" + key + "' is not an integer: '" + raw + "'", find(key)->line);
  return v;
}

long ConfigBlock::integer_or(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool ConfigBlock::flag(const std::string& key) const {
  const auto& raw = text(key);
  if (raw == "true" || raw == "yes" || raw == "1")
    return true;
  if (raw == "false" || raw == "no" || raw == "0")
    return false;
  fail("field '" + key + "' is not a boolean: '" + raw + "'", find(key)->line);
}

bool ConfigBlock::flag_or(const std::string& key, bool fallback) const {
  return has(key) ? flag(key) : fallback;
}

std::vector<std::string> ConfigBlock::list(const std::string& key) const {
  std::vector<std::string> out;
  const auto* e = find(key);
  if (!e)
    return out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty())
      out.push_back(item);
  }
  return out;
}

std::vector<double> ConfigBlock::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    bool ok = false;
    out.push_back(parse_double(item, ok));
    if (!ok)
      fail("field '" + key + "' has a non-numeric item '" + item + "'", find(key)->line);
  }
  return out;
}

const ConfigBlock* ConfigDocument::find(const std::string& kind, const std::string& name) const {
  for (const auto& b : blocks)
    if (b.kind == kind && (name.empty() || b.name == name))
      return &b;
  return nullptr;
}

const ConfigBlock& ConfigDocument::require(const std::string& kind, const std::string& name) const {
  const auto* b = find(kind, name);
  if (!b)
    throw ConfigError(source + ": missing block [" + kind + (name.empty() ? "" : " " + name) + "]");
  return *b;
}

std::vector<const ConfigBlock*> ConfigDocument::all(const std::string& kind) const {
  std::vector<const ConfigBlock*> out;
  for (const auto& b : blocks)
    if (b.kind == kind)
      out.push_back(&b);
  return out;
}

std::filesystem::path ConfigDocument::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  if (p.is_absolute() || base_dir.empty())
    return p;
  return base_dir / p;
}

ConfigDocument parse_config(std::istream& in, const std::string& source,
                            const std::filesystem::path& base_dir) {
  ConfigDocument doc;
  doc.source = source;
  doc.base_dir = base_dir;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty())
      continue;

    auto error = [&](const std::string& msg) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
    };

    if (line.front() == '[') {
      if (line.back() != ']')
        error("unterminated block header '" + line + "'");
      const std::string inner = trim(line.substr(1, line.size() - 2));
      if (inner.empty())
        error("empty block header");
      ConfigBlock block;
      const auto space = inner.find_first_of(" \t");
      block.kind = inner.substr(0, space);
      if (space != std::string::npos)
        block.name = trim(inner.substr(space));
      block.source = source;
      block.line = line_no;
      doc.blocks.push_back(std::move(block));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      error("expected 'key = value', got '" + line + "'");
    if (doc.blocks.empty())
      error("entry outside of any [block]");
    ConfigEntry entry{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (entry.key.empty())
      error("empty key");
    auto& block = doc.blocks.back();
    if (block.find(entry.key))
      error("duplicate key '" + entry.key + "' in block [" + block.kind + "]");
    block.entries.push_back(std::move(entry));
  }
  return doc;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open '" + path.string() + "'");
  return parse_config(in, path.string(), path.parent_path());
}

} // namespace crnbp
