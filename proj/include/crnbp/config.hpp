#pragma once

// Minimal block-structured key/value format shared by constants, system and
// scenario files:
//
//   # comment (anywhere on a line)
//   [kind name]        block header; name is optional and may contain spaces
//   key = value        entry inside the current block
//
// Keys are case-sensitive. Errors carry "source:line:" context.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace crnbp {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

class ConfigBlock {
public:
  std::string kind;
  std::string name;
  std::string source;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }

  const std::string& text(const std::string& key) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  bool flag(const std::string& key) const;
  bool flag_or(const std::string& key, bool fallback) const;
  /// Comma separated list; empty value gives an empty list.
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  /// Throws ConfigError("source:line: msg") anchored at this block or entry.
  [[noreturn]] void fail(const std::string& msg, int at_line = 0) const;
};

struct ConfigDocument {
  std::string source;
  std::filesystem::path base_dir;
  std::vector<ConfigBlock> blocks;

  const ConfigBlock* find(const std::string& kind, const std::string& name = {}) const;
  const ConfigBlock& require(const std::string& kind, const std::string& name = {}) const;
  std::vector<const ConfigBlock*> all(const std::string& kind) const;
  /// Resolves a path relative to the directory of the document.
  std::filesystem::path resolve(const std::string& relative) const;
};

ConfigDocument parse_config(std::istream& in, const std::string& source,
                            const std::filesystem::path& base_dir = {});
ConfigDocument load_config(const std::filesystem::path& path);

std::string trim(const std::string& s);

} // namespace crnbp
