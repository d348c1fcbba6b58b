#ifndef HALRATE_HARNESS_CONFIG_HPP
#define HALRATE_HARNESS_CONFIG_HPP

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "halrate/iterations.hpp"

namespace halrate::harness {

/// Bad configuration: unknown key, type mismatch, or an incompatible
/// scheme/map/schedule combination. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Flat `key = value` text. One entry per line, `#` starts a comment, values
// are numbers, bare words, "quoted strings" or bracketed numeric arrays.

struct RawValue {
  std::string text;
  int line = 0;
};

class RawConfig {
 public:
  static RawConfig parse(std::string_view text, const std::string& origin = "<config>") {
    RawConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto body = trim(strip_comment(line));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
      }
      const auto key = trim(body.substr(0, eq));
      auto value = trim(body.substr(eq + 1));
      if (key.empty() || key.find_first_of(" \t\"") != std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed key `" + key + "`");
      }
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
      }
      if (!cfg.values_.emplace(key, RawValue{value, lineno}).second) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
      }
    }
    return cfg;
  }

  static RawConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, RawValue>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

  std::string string(const std::string& key) const { return get(key).text; }

  std::optional<std::string> optional_string(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  double number(const std::string& key) const {
    const auto& v = get(key);
    double out = 0.0;
    const auto* first = v.text.data();
    const auto* last = first + v.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw type_error(key, "a number");
    return out;
  }

  std::optional<double> optional_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const auto& v = get(key);
    std::uint64_t out = 0;
    const auto* first = v.text.data();
    const auto* last = first + v.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw type_error(key, "a nonnegative integer");
    return out;
  }

  long long integer(const std::string& key) const {
    const auto& v = get(key);
    long long out = 0;
    const auto* first = v.text.data();
    const auto* last = first + v.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw type_error(key, "an integer");
    return out;
  }

  /// `[a, b, ...]` or a single number.
  std::vector<double> numbers(const std::string& key) const {
    const auto j = array(key);
    if (j.is_number()) return {j.get<double>()};
    std::vector<double> out;
    for (const auto& e : j) {
      if (!e.is_number()) throw type_error(key, "an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(const std::string& key) const {
    const auto j = array(key);
    if (!j.is_array() || j.empty()) throw type_error(key, "a nested array of numbers");
    std::vector<std::vector<double>> out;
    for (const auto& row : j) {
      if (!row.is_array()) throw type_error(key, "a nested array of numbers");
      auto& r = out.emplace_back();
      for (const auto& e : row) {
        if (!e.is_number()) throw type_error(key, "a nested array of numbers");
        r.push_back(e.get<double>());
      }
    }
    return out;
  }

  std::vector<std::size_t> indices(const std::string& key) const {
    const auto j = array(key);
    std::vector<std::size_t> out;
    const auto take = [&](const nlohmann::json& e) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0)) {
        throw type_error(key, "an array of nonnegative integers");
      }
      out.push_back(e.get<std::size_t>());
    };
    if (j.is_array()) {
      for (const auto& e : j) take(e);
    } else {
      take(j);
    }
    return out;
  }

  ConfigError type_error(const std::string& key, const std::string& expected) const {
    const auto& v = get(key);
    return ConfigError(origin_ + ":" + std::to_string(v.line) + ": key `" + key + "` must be " + expected +
                       ", got `" + v.text + "`");
  }

 private:
  const RawValue& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing required key `" + key + "`");
    return it->second;
  }

  nlohmann::json array(const std::string& key) const {
    const auto& v = get(key);
    try {
      return nlohmann::json::parse(v.text);
    } catch (const nlohmann::json::parse_error&) {
      throw type_error(key, "a number or bracketed array");
    }
  }

  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string origin_;
  std::map<std::string, RawValue> values_;
};

// ---------------------------------------------------------------------------
// Typed experiment description

enum class SpaceKind { euclid, tripod };

struct RateOverride {
  std::optional<long long> slope;
  std::optional<long long> offset;
  std::optional<double> coeff;
};

struct ExperimentConfig {
  std::string source;
  nlohmann::json echo;  // raw key/value pairs as read

  SpaceKind space = SpaceKind::euclid;
  std::size_t dim = 1;
  Scheme scheme = Scheme::halpern;
  bool hilbert_proximal = false;  // scheme written as `hppa`

  std::string map_kind;
  double angle = 90.0;
  std::vector<double> rays{0, 1};
  std::vector<std::vector<double>> matrix;
  double l1_weight = 1.0;
  std::vector<double> anchor;

  std::string f_kind;  // linear_contraction | constant
  double rho = 0.0;
  std::vector<double> f_center;

  std::string schedule_kind;
  std::vector<double> schedule_alpha;
  std::vector<double> schedule_gamma;

  std::vector<double> x;
  std::vector<double> u;
  std::optional<std::vector<double>> fixture_p;

  std::size_t horizon = 10'000;
  std::size_t k_max = 50;
  std::vector<std::size_t> cross;
  std::uint64_t seed = 42;
  std::optional<long long> M_override;
  std::size_t audit_samples = 200;
  std::size_t max_scalars = 1'000'000;

  std::filesystem::path csv_path;
  std::filesystem::path summary_path;

  std::map<std::string, RateOverride> overrides;

  bool is_family() const { return map_kind == "linear_psd" || map_kind == "l1" || map_kind == "quadratic_to_point"; }
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "space.kind",     "space.dim",      "scheme",          "map.kind",       "map.angle",
      "map.rays",       "map.matrix",     "map.w",           "map.anchor",     "map.f",
      "map.rho",        "map.f_center",   "schedule.kind",   "schedule.alpha", "schedule.gamma",
      "run.x",          "run.u",          "run.horizon",     "run.k_max",      "run.cross",
      "run.seed",       "run.M",          "run.audit_samples", "run.max_scalars", "fixture.p",
      "output.csv",     "output.summary",
  };
  return keys;
}

/// Environment variable naming the directory for relative output paths.
inline constexpr const char* kOutputDirEnv = "HALRATE_OUTPUT_DIR";

namespace detail {

inline std::filesystem::path resolve_output(const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) return std::filesystem::path(dir) / p;
  }
  return p;
}

inline void require_one_of(const RawConfig& raw, const std::string& key, const std::string& value,
                           std::initializer_list<std::string_view> allowed) {
  for (auto a : allowed) {
    if (value == a) return;
  }
  std::string list;
  for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  throw ConfigError(raw.origin() + ": key `" + key + "` must be one of {" + list + "}, got `" + value + "`");
}

}  // namespace detail

/// Validates a parsed file into an ExperimentConfig. Every diagnostic names the offending key.
inline ExperimentConfig build_config(const RawConfig& raw) {
  ExperimentConfig cfg;
  cfg.source = raw.origin();
  const auto fail = [&raw](const std::string& key, const std::string& why) {
    return ConfigError(raw.origin() + ": key `" + key + "`: " + why);
  };

  for (const auto& [key, value] : raw.values()) {
    cfg.echo[key] = value.text;
    if (key.rfind("override.", 0) == 0) {
      const auto dot = key.rfind('.');
      const auto field = key.substr(dot + 1);
      const auto rate = key.substr(9, dot - 9);
      if (rate.empty() || (field != "slope" && field != "offset" && field != "coeff")) {
        throw ConfigError(raw.origin() + ": unknown key `" + key + "` (override.<rate>.slope|offset|coeff)");
      }
      auto& o = cfg.overrides[rate];
      if (field == "slope") o.slope = raw.integer(key);
      if (field == "offset") o.offset = raw.integer(key);
      if (field == "coeff") o.coeff = raw.number(key);
      continue;
    }
    if (!known_keys().count(key)) throw ConfigError(raw.origin() + ": unknown key `" + key + "`");
  }

  // space
  const auto space = raw.string("space.kind");
  detail::require_one_of(raw, "space.kind", space, {"euclid", "tripod"});
  cfg.space = space == "euclid" ? SpaceKind::euclid : SpaceKind::tripod;
  if (cfg.space == SpaceKind::euclid) {
    const auto dim = raw.has("space.dim") ? raw.unsigned_integer("space.dim") : 1;
    if (dim == 0) throw fail("space.dim", "dimension must be positive");
    cfg.dim = dim;
  } else if (raw.has("space.dim")) {
    throw fail("space.dim", "tripod has no dimension");
  }

  // scheme
  const auto scheme = raw.string("scheme");
  detail::require_one_of(raw, "scheme", scheme, {"halpern", "sam", "aim", "happa", "hppa"});
  if (scheme == "halpern") cfg.scheme = Scheme::halpern;
  if (scheme == "sam") cfg.scheme = Scheme::sam;
  if (scheme == "aim") cfg.scheme = Scheme::aim;
  if (scheme == "happa" || scheme == "hppa") cfg.scheme = Scheme::happa;
  cfg.hilbert_proximal = scheme == "hppa";

  // map
  cfg.map_kind = raw.string("map.kind");
  detail::require_one_of(raw, "map.kind", cfg.map_kind,
                         {"identity", "negation", "rotation", "ray_swap", "linear_psd", "l1", "quadratic_to_point"});
  const bool euclid = cfg.space == SpaceKind::euclid;
  if ((cfg.map_kind == "negation" || cfg.map_kind == "rotation" || cfg.map_kind == "linear_psd" ||
       cfg.map_kind == "l1") && !euclid) {
    throw fail("map.kind", cfg.map_kind + " needs space.kind = euclid");
  }
  if (cfg.map_kind == "ray_swap" && euclid) throw fail("map.kind", "ray_swap needs space.kind = tripod");
  if (cfg.map_kind == "rotation") {
    if (cfg.dim != 2) throw fail("map.kind", "rotation needs space.dim = 2");
    if (raw.has("map.angle")) cfg.angle = raw.number("map.angle");
  }
  if (cfg.map_kind == "ray_swap" && raw.has("map.rays")) {
    cfg.rays = raw.numbers("map.rays");
    if (cfg.rays.size() != 2) throw fail("map.rays", "expected two ray indices");
  }
  if (cfg.map_kind == "linear_psd") cfg.matrix = raw.matrix("map.matrix");
  if (cfg.map_kind == "l1" && raw.has("map.w")) {
    cfg.l1_weight = raw.number("map.w");
    if (!(cfg.l1_weight >= 0.0)) throw fail("map.w", "weight must be >= 0");
  }
  if (cfg.map_kind == "quadratic_to_point") cfg.anchor = raw.numbers("map.anchor");

  const bool needs_family = cfg.scheme == Scheme::happa;
  if (needs_family && !cfg.is_family()) {
    throw fail("map.kind", scheme + " requires a resolvent family (linear_psd, l1, quadratic_to_point)");
  }
  if (!needs_family && cfg.is_family()) {
    throw fail("map.kind", cfg.map_kind + " is a resolvent family; use scheme = happa or hppa");
  }
  if (cfg.hilbert_proximal && (!euclid || cfg.map_kind == "quadratic_to_point")) {
    throw fail("scheme", "hppa uses resolvents of monotone operators on euclid space (linear_psd or l1)");
  }

  // contraction
  const bool needs_f = cfg.scheme == Scheme::sam || cfg.scheme == Scheme::aim;
  if (needs_f) {
    cfg.f_kind = raw.has("map.f") ? raw.string("map.f") : "linear_contraction";
    detail::require_one_of(raw, "map.f", cfg.f_kind, {"linear_contraction", "constant"});
    if (cfg.f_kind == "constant") {
      cfg.rho = raw.has("map.rho") ? raw.number("map.rho") : 0.0;
      if (cfg.rho != 0.0) throw fail("map.rho", "a constant f has rho = 0");
    } else {
      cfg.rho = raw.number("map.rho");
    }
    if (!(cfg.rho < 1.0)) throw fail("map.rho", "rho must be < 1");
    if (!(cfg.rho >= 0.0)) throw fail("map.rho", "rho must be >= 0");
    cfg.f_center = raw.numbers("map.f_center");
  } else {
    for (const char* key : {"map.f", "map.rho", "map.f_center"}) {
      if (raw.has(key)) throw fail(key, std::string("only used by scheme = sam or aim"));
    }
  }

  // schedule
  cfg.schedule_kind = raw.string("schedule.kind");
  detail::require_one_of(raw, "schedule.kind", cfg.schedule_kind,
                         {"halpern_prop2", "lieder", "sam_prop5", "happa_prop9", "constant", "explicit"});
  if (cfg.schedule_kind == "constant" || cfg.schedule_kind == "explicit") {
    cfg.schedule_alpha = raw.numbers("schedule.alpha");
    if (raw.has("schedule.gamma")) cfg.schedule_gamma = raw.numbers("schedule.gamma");
    if (cfg.schedule_kind == "constant" && (cfg.schedule_alpha.size() != 1 || cfg.schedule_gamma.size() > 1)) {
      throw fail("schedule.alpha", "constant schedule takes scalar alpha (and gamma)");
    }
  } else if (raw.has("schedule.alpha") || raw.has("schedule.gamma")) {
    throw fail(raw.has("schedule.alpha") ? "schedule.alpha" : "schedule.gamma",
               "only used by constant or explicit schedules");
  }
  const bool has_gamma = cfg.schedule_kind == "happa_prop9" || !cfg.schedule_gamma.empty();
  if (needs_family && !has_gamma) throw fail("schedule.kind", scheme + " requires a gamma schedule");
  if (!needs_family && has_gamma) throw fail("schedule.kind", scheme + " takes an alpha-only schedule");
  if (cfg.schedule_kind == "sam_prop5" && !needs_f && cfg.scheme != Scheme::halpern) {
    throw fail("schedule.kind", "sam_prop5 applies to sam, aim or halpern");
  }
  if (cfg.schedule_kind == "lieder") {
    if (cfg.scheme != Scheme::halpern) throw fail("schedule.kind", "lieder schedule applies to halpern only");
    if (!euclid) throw fail("schedule.kind", "lieder schedule needs a Hilbert (euclid) space");
  }
  if (cfg.schedule_kind == "halpern_prop2" && cfg.scheme != Scheme::halpern) {
    throw fail("schedule.kind", "halpern_prop2 applies to halpern only");
  }

  // start, anchor, fixture
  cfg.x = raw.numbers("run.x");
  const bool anchored = cfg.scheme == Scheme::halpern || cfg.scheme == Scheme::happa;
  if (anchored) {
    cfg.u = raw.numbers("run.u");
  } else if (raw.has("run.u")) {
    throw fail("run.u", "sam and aim have no anchor u");
  }
  if (cfg.schedule_kind == "lieder" && cfg.u != cfg.x) throw fail("run.u", "lieder schedule requires u = x");
  if (raw.has("fixture.p")) cfg.fixture_p = raw.numbers("fixture.p");

  // run
  if (raw.has("run.horizon")) cfg.horizon = raw.unsigned_integer("run.horizon");
  if (cfg.horizon < 1) throw fail("run.horizon", "horizon must be >= 1");
  if (raw.has("run.k_max")) cfg.k_max = raw.unsigned_integer("run.k_max");
  if (raw.has("run.cross")) {
    if (!needs_family) throw fail("run.cross", "cross residuals apply to happa/hppa only");
    cfg.cross = raw.indices("run.cross");
  }
  if (raw.has("run.seed")) cfg.seed = raw.unsigned_integer("run.seed");
  if (raw.has("run.M")) {
    cfg.M_override = raw.integer("run.M");
    if (*cfg.M_override < 1) throw fail("run.M", "M must be a positive integer");
  }
  if (raw.has("run.audit_samples")) cfg.audit_samples = raw.unsigned_integer("run.audit_samples");
  if (raw.has("run.max_scalars")) cfg.max_scalars = raw.unsigned_integer("run.max_scalars");
  if (cfg.schedule_kind == "explicit") {
    if (cfg.schedule_alpha.size() < cfg.horizon) throw fail("schedule.alpha", "explicit list shorter than run.horizon");
    if (!cfg.schedule_gamma.empty() && cfg.schedule_gamma.size() < cfg.horizon + 1) {
      throw fail("schedule.gamma", "explicit gamma list needs run.horizon + 1 entries");
    }
    for (std::size_t m : cfg.cross) {
      if (m >= cfg.schedule_gamma.size()) throw fail("run.cross", "index beyond explicit gamma list");
    }
  }

  // output
  std::string stem = std::filesystem::path(raw.origin()).stem().string();
  if (stem.empty() || stem.front() == '<') stem = "run";
  cfg.csv_path = detail::resolve_output(raw.has("output.csv") ? raw.string("output.csv") : stem + ".csv");
  if (raw.has("output.summary")) {
    cfg.summary_path = detail::resolve_output(raw.string("output.summary"));
  } else {
    cfg.summary_path = cfg.csv_path;
    cfg.summary_path.replace_extension(".summary.json");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) { return build_config(RawConfig::load(path)); }

inline ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>") {
  return build_config(RawConfig::parse(text, origin));
}

}  // namespace halrate::harness

#endif  // HALRATE_HARNESS_CONFIG_HPP
