#include "sdot/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sdot/errors.hpp"

namespace sdot {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (cfg.kv_.count(key))
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                        key + "'");
    cfg.kv_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return kv_.count(key) != 0; }

std::string Config::get_string(const std::string& key) {
  const auto it = kv_.find(key);
  if (it == kv_.end())
    throw ConfigError(origin_ + ": missing required key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  if (!has(key)) return fallback;
  return get_string(key);
}

double Config::parse_double(const std::string& text, const std::string& key) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  return v;
}

std::int64_t Config::parse_int(const std::string& text, const std::string& key) {
  // Accept scientific shorthand like 1e6 for iteration counts.
  if (text.find_first_of(".eE") != std::string::npos) {
    const double v = parse_double(text, key);
    const auto n = static_cast<std::int64_t>(v);
    if (static_cast<double>(n) != v)
      throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
    return n;
  }
  std::int64_t v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as an integer");
  return v;
}

double Config::get_double(const std::string& key) {
  return parse_double(get_string(key), key);
}

double Config::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  return get_double(key);
}

std::int64_t Config::get_int(const std::string& key) {
  return parse_int(get_string(key), key);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) {
  if (!has(key)) return fallback;
  return get_int(key);
}

bool Config::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) {
  const std::string raw = get_string(key);
  std::vector<double> out;
  std::string item;
  std::istringstream in(raw);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("key '" + key + "': empty list element");
    out.push_back(parse_double(item, key));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<std::string> Config::get_name_list(const std::string& key) {
  const std::string raw = get_string(key);
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(raw);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("key '" + key + "': empty list element");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void Config::require_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : kv_)
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!unknown.empty())
    throw ConfigError(origin_ + ": unknown config keys: " + unknown);
}

// ---------------------------------------------------------------------------

CostFunction cost_from_config(Config& cfg) {
  const std::string kind = cfg.get_string("cost.kind", "quadratic");
  if (kind == "quadratic") return CostFunction::quadratic();
  if (kind == "powerp") return CostFunction::power(cfg.get_double("cost.p"));
  throw ConfigError("cost.kind must be 'quadratic' or 'powerp', got '" + kind + "'");
}

SourcePtr source_from_config(Config& cfg) {
  const std::string kind = cfg.get_string("source.kind");
  if (kind == "uniform_cube") {
    return make_uniform_cube(static_cast<int>(cfg.get_int("source.dim")),
                             cfg.get_double("source.lo", 0.0),
                             cfg.get_double("source.hi", 1.0));
  }
  if (kind == "gaussian") {
    const double sigma = cfg.get_double("source.sigma", 1.0);
    if (cfg.has("source.mean_list"))
      return make_gaussian(cfg.get_double_list("source.mean_list"), sigma);
    const int dim = static_cast<int>(cfg.get_int("source.dim", 1));
    return make_gaussian(dim, cfg.get_double("source.mean", 0.0), sigma);
  }
  if (kind == "heavy_tail_radial") {
    const int dim = static_cast<int>(cfg.get_int("source.dim"));
    return make_heavy_tail_radial(dim, cfg.get_double("source.exponent", dim + 3.0));
  }
  if (kind == "sqrt_density_1d") return make_sqrt_density_1d();
  if (kind == "perturbed_uniform_1d")
    return make_perturbed_uniform_1d(cfg.get_double("source.delta"));
  if (kind == "gaussian_mixture") {
    const int n = static_cast<int>(cfg.get_int("source.components"));
    std::vector<GaussianComponent> comps;
    for (int i = 0; i < n; ++i) {
      const std::string p = "source.c" + std::to_string(i) + ".";
      GaussianComponent c;
      c.weight = cfg.get_double(p + "weight", 1.0);
      c.mean = cfg.get_double_list(p + "mean");
      c.sigma = cfg.get_double(p + "sigma", 1.0);
      comps.push_back(std::move(c));
    }
    return make_gaussian_mixture(std::move(comps));
  }
  throw ConfigError("unknown source.kind '" + kind + "'");
}

CompactSet compact_from_config(Config& cfg, int dim) {
  const std::string kind = cfg.get_string("box.kind");
  auto broadcast = [&](const std::string& key, double fallback_ok, bool has_fallback) {
    if (cfg.has(key + "_list")) {
      Vec v = cfg.get_double_list(key + "_list");
      if (static_cast<int>(v.size()) != dim)
        throw ConfigError("key '" + key + "_list': expected " + std::to_string(dim) +
                          " entries");
      return v;
    }
    const double s = has_fallback ? cfg.get_double(key, fallback_ok) : cfg.get_double(key);
    return Vec(static_cast<std::size_t>(dim), s);
  };
  if (kind == "ball")
    return CompactSet::ball(broadcast("box.center", 0.0, true),
                            cfg.get_double("box.radius"));
  if (kind == "cube")
    return CompactSet::cube(broadcast("box.lo", 0.0, false),
                            broadcast("box.hi", 0.0, false));
  throw ConfigError("box.kind must be 'ball' or 'cube', got '" + kind + "'");
}

}  // namespace sdot
