#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sdot/cost.hpp"
#include "sdot/measures.hpp"
#include "sdot/projection.hpp"

namespace sdot {

// Flat key-value configuration with dotted section prefixes:
//   optimizer.psgd.b = 0.75   # comment
// Floats are parsed with round-trip (bit-exact) semantics. Every key must be
// consumed by the reader; leftovers are reported as errors.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_list(const std::string& key);
  std::vector<std::string> get_name_list(const std::string& key);

  // CLI overrides (--seed, --repeats, ...).
  void set(const std::string& key, const std::string& value);

  // Throws ConfigError naming any key that was never read.
  void require_consumed() const;

  static double parse_double(const std::string& text, const std::string& key);
  static std::int64_t parse_int(const std::string& text, const std::string& key);

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

// Shared config fragments.
CostFunction cost_from_config(Config& cfg);
SourcePtr source_from_config(Config& cfg);
// Compact K under "box."; needs the ambient dimension for scalar broadcasts.
CompactSet compact_from_config(Config& cfg, int dim);

}  // namespace sdot
