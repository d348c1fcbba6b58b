#ifndef HALRATE_HARNESS_EXPERIMENT_HPP
#define HALRATE_HARNESS_EXPERIMENT_HPP

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "halrate/harness/config.hpp"
#include "halrate/harness/csv.hpp"
#include "halrate/iterations.hpp"
#include "halrate/maps.hpp"
#include "halrate/rates.hpp"
#include "halrate/spaces.hpp"

namespace halrate::harness {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kSetupError = 2 };

struct CheckResult {
  std::string name;
  bool passed = true;
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_slack = 0.0;
  nlohmann::json witnesses = nlohmann::json::array();
};

inline CheckResult to_check(const AuditReport& r) {
  CheckResult c{r.subject, r.passed(), r.checked, r.failures, r.worst_slack, nlohmann::json::array()};
  for (const auto& v : r.violations) c.witnesses.push_back({{"check", v.check}, {"index", v.index}, {"slack", v.slack}});
  return c;
}

struct RunSummary {
  std::string config;
  nlohmann::json echo;
  int exit_code = kPass;
  std::string error;
  std::string scheme;
  std::string catalog;
  long long M = 0;
  std::string fixture_p;
  std::string provenance;
  std::vector<CheckResult> audits;
  std::vector<RateReport> rates;
  std::string csv_path;
  double wall_seconds = 0.0;

  bool passed() const { return exit_code == kPass; }
};

namespace detail {

inline nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline nlohmann::json witness_json(const std::optional<RateWitness>& w, bool with_k) {
  if (!w) return nullptr;
  nlohmann::json j{{"n", w->n}, {"b_n", w->value}, {"threshold", w->threshold}};
  if (with_k) j["k"] = w->k;
  return j;
}

}  // namespace detail

inline nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json j;
  j["config"] = s.config;
  j["echo"] = s.echo;
  j["verdict"] = s.exit_code == kPass ? "pass" : (s.exit_code == kCheckFailed ? "fail" : "error");
  j["exit_code"] = s.exit_code;
  if (!s.error.empty()) j["error"] = s.error;
  j["scheme"] = s.scheme;
  j["catalog"] = s.catalog;
  j["M"] = s.M;
  j["fixture"] = {{"p", s.fixture_p}, {"provenance", s.provenance}};
  auto& audits = j["audits"] = nlohmann::json::array();
  for (const auto& a : s.audits) {
    audits.push_back({{"name", a.name},
                      {"passed", a.passed},
                      {"checked", a.checked},
                      {"failures", a.failures},
                      {"worst_slack", detail::number_or_null(a.worst_slack)},
                      {"witnesses", a.witnesses}});
  }
  auto& rates = j["rates"] = nlohmann::json::array();
  for (const auto& r : s.rates) {
    rates.push_back({{"name", r.name},
                     {"passed", r.passed()},
                     {"rate_ok", r.rate_ok},
                     {"curve_ok", r.curve_ok},
                     {"identity_ok", r.identity_ok},
                     {"identity_exact", r.identity_exact},
                     {"identity_residual", detail::number_or_null(r.identity_residual)},
                     {"checked_k", r.checked_k},
                     {"unchecked_k", r.unchecked_k},
                     {"worst_rate_slack", detail::number_or_null(r.worst_rate_slack)},
                     {"worst_curve_slack", detail::number_or_null(r.worst_curve_slack)},
                     {"rate_witness", detail::witness_json(r.rate_witness, true)},
                     {"curve_witness", detail::witness_json(r.curve_witness, false)}});
  }
  j["csv"] = s.csv_path;
  j["wall_seconds"] = s.wall_seconds;
  return j;
}

/// Applies `override.<rate>.*` entries. `happa.cross` matches every cross rate.
inline void apply_overrides(std::vector<RateFunction>& catalog, const std::map<std::string, RateOverride>& overrides) {
  for (const auto& [name, o] : overrides) {
    bool matched = false;
    for (auto& rf : catalog) {
      const bool family_match = rf.kind == ResidualKind::cross && rf.name.rfind(name + "[", 0) == 0;
      if (rf.name != name && !family_match) continue;
      matched = true;
      if (o.slope) rf.phi.slope = *o.slope;
      if (o.offset) rf.phi.offset = *o.offset;
      if (o.coeff) {
        if (!rf.curve) throw ConfigError("override." + name + ".coeff: rate has no bound curve");
        rf.curve->coeff = *o.coeff;
      }
    }
    if (!matched) throw ConfigError("override." + name + ": no such rate in this run's catalog");
  }
}

inline Schedule make_schedule(const ExperimentConfig& cfg) {
  const auto& k = cfg.schedule_kind;
  if (k == "halpern_prop2") return Schedule::halpern_prop2();
  if (k == "lieder") return Schedule::lieder();
  if (k == "sam_prop5") return Schedule::sam_prop5(cfg.rho);
  if (k == "happa_prop9") return Schedule::happa_prop9();
  if (k == "constant") {
    return Schedule::constant(cfg.schedule_alpha.at(0),
                              cfg.schedule_gamma.empty() ? std::nullopt : std::optional(cfg.schedule_gamma[0]));
  }
  return Schedule::explicit_list(cfg.schedule_alpha, cfg.schedule_gamma);
}

/// Which rate catalog (if any) the configured scheme/schedule pairing has.
inline std::optional<Catalog> catalog_for(const ExperimentConfig& cfg) {
  const auto& k = cfg.schedule_kind;
  switch (cfg.scheme) {
    case Scheme::halpern:
      if (k == "halpern_prop2") return Catalog::halpern_prop2;
      if (k == "lieder") return Catalog::lieder;
      if (k == "sam_prop5") return Catalog::sam;  // constant-f special case, rho = 0, J = 2
      return std::nullopt;
    case Scheme::sam:
    case Scheme::aim:
      if (k == "sam_prop5") return Catalog::sam;
      return std::nullopt;
    case Scheme::happa:
      if (k == "happa_prop9") return Catalog::happa;
      return std::nullopt;
  }
  return std::nullopt;
}

namespace detail {

template <WSpace S>
typename S::Point to_point(const S& space, const std::vector<double>& coords, const char* key) {
  try {
    return space.point(coords);
  } catch (const InputError& e) {
    throw ConfigError(std::string("key `") + key + "`: " + e.what());
  }
}

template <WSpace S>
Map<S> make_map(const S& space, const ExperimentConfig& cfg) {
  if (cfg.map_kind == "identity") return identity_map(space);
  if constexpr (std::is_same_v<S, Euclid>) {
    if (cfg.map_kind == "negation") return negation_map(space);
    if (cfg.map_kind == "rotation") return rotation_map(space, cfg.angle);
  } else {
    if (cfg.map_kind == "ray_swap") {
      return ray_swap_map(space, static_cast<int>(cfg.rays[0]), static_cast<int>(cfg.rays[1]));
    }
  }
  throw ConfigError("key `map.kind`: " + cfg.map_kind + " is not available in this space");
}

template <WSpace S>
ResolventFamily<S> make_family(const S& space, const ExperimentConfig& cfg) {
  if (cfg.map_kind == "quadratic_to_point") return quadratic_to_point_family(space, to_point(space, cfg.anchor, "map.anchor"));
  if constexpr (std::is_same_v<S, Euclid>) {
    if (cfg.map_kind == "l1") return l1_family(space, cfg.l1_weight);
    if (cfg.map_kind == "linear_psd") {
      const auto rows = static_cast<Eigen::Index>(cfg.matrix.size());
      Eigen::MatrixXd a(rows, rows);
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(cfg.matrix[i].size()) != rows) throw ConfigError("key `map.matrix`: matrix must be square");
        for (Eigen::Index j = 0; j < rows; ++j) a(i, j) = cfg.matrix[i][j];
      }
      try {
        return linear_psd_family(space, a);
      } catch (const InputError& e) {
        throw ConfigError(std::string("key `map.matrix`: ") + e.what());
      }
    }
  }
  throw ConfigError("key `map.kind`: " + cfg.map_kind + " is not available in this space");
}

inline std::optional<BoundCurve> curve_of(const std::vector<RateFunction>& rates, ResidualKind kind) {
  for (const auto& rf : rates) {
    if (rf.kind == kind && rf.curve) return rf.curve;
  }
  return std::nullopt;
}

template <WSpace S>
void run_in_space(const S& space, const ExperimentConfig& cfg, RunSummary& out) {
  using Point = typename S::Point;
  const auto x = to_point(space, cfg.x, "run.x");
  const std::optional<Point> u = cfg.u.empty() ? std::nullopt : std::optional(to_point(space, cfg.u, "run.u"));
  const auto sched = make_schedule(cfg);
  const std::size_t N = cfg.horizon;

  std::optional<Map<S>> T;
  std::optional<ResolventFamily<S>> family;
  std::optional<Map<S>> f;
  if (cfg.is_family()) {
    family = make_family(space, cfg);
  } else {
    T = make_map(space, cfg);
  }
  if (!cfg.f_center.empty()) f = contraction_toward(space, to_point(space, cfg.f_center, "map.f_center"), cfg.rho);

  // Maps the fixture has to be a fixed point of.
  std::vector<Map<S>> certified;
  std::vector<double> family_gammas;
  if (family) {
    const std::size_t upto = std::min<std::size_t>(N, 10);
    for (std::size_t n = 0; n <= upto; ++n) family_gammas.push_back(sched.gamma(n));
    for (std::size_t m : cfg.cross) family_gammas.push_back(sched.gamma(m));
    for (double g : family_gammas) certified.push_back(family->member(g));
  } else {
    certified.push_back(*T);
  }

  Point p = space.origin();
  Provenance provenance = Provenance::analytic;
  if (cfg.fixture_p) {
    p = to_point(space, *cfg.fixture_p, "fixture.p");
  } else {
    p = averaged_fixed_point(certified.front(), x);
    provenance = Provenance::numeric;
  }
  const auto fixture = certify_fixture(space, p, std::span<const Map<S>>(certified), provenance);
  out.fixture_p = space.format(fixture.p);
  out.provenance = provenance == Provenance::analytic ? "analytic" : "numeric";

  MConstant M;
  if (f) {
    M = compute_M_contraction(space, x, *f, fixture.p);
  } else {
    M = compute_M_anchored(space, cfg.scheme == Scheme::happa ? MRecipe::happa : MRecipe::halpern, x, *u, fixture.p);
  }
  if (cfg.M_override) M.value = *cfg.M_override;
  out.M = M.value;
  const auto Md = static_cast<double>(M.value);

  // Structural audits.
  out.audits.push_back(to_check(axiom_audit(space, cfg.audit_samples, cfg.seed)));
  const auto pairs = make_pairs(space, cfg.audit_samples, cfg.seed + 1);
  const std::span<const PointPair<Point>> pair_span(pairs);
  if (T) out.audits.push_back(to_check(lipschitz_audit(*T, pair_span, cfg.seed + 1).audit));
  if (f) out.audits.push_back(to_check(lipschitz_audit(*f, pair_span, cfg.seed + 1).audit));
  if (family) {
    for (const auto& member : certified) out.audits.push_back(to_check(lipschitz_audit(member, pair_span, cfg.seed + 1).audit));
    Rng rng(cfg.seed + 2);
    std::vector<Point> ys;
    for (int i = 0; i < 20; ++i) ys.push_back(space.sample(rng, 10.0));
    out.audits.push_back(to_check(c1_audit(*family, std::span<const double>(family_gammas), std::span<const Point>(ys), cfg.seed + 2)));
  }

  // Trace.
  TraceOptions<Point> opts;
  opts.reference = fixture.p;
  opts.cross = cfg.cross;
  opts.max_scalars = cfg.max_scalars;
  Trace<Point> trace;
  switch (cfg.scheme) {
    case Scheme::halpern: trace = run_halpern(space, *T, x, *u, sched, N, opts); break;
    case Scheme::sam: trace = run_sam(space, *T, *f, x, sched, N, opts); break;
    case Scheme::aim: trace = run_aim(space, *T, *f, x, sched, N, opts); break;
    case Scheme::happa: trace = run_happa(space, *family, x, *u, sched, N, opts); break;
  }

  // Per-step inequalities. A Halpern trace is SAM with f = u and rho = 0.
  out.audits.push_back(to_check(audit_boundedness(trace, Md)));
  switch (cfg.scheme) {
    case Scheme::halpern: out.audits.push_back(to_check(audit_sam_lemma(trace, 0.0, Md))); break;
    case Scheme::sam: out.audits.push_back(to_check(audit_sam_lemma(trace, cfg.rho, Md))); break;
    case Scheme::aim: out.audits.push_back(to_check(audit_aim_lemma(trace, cfg.rho, Md))); break;
    case Scheme::happa: out.audits.push_back(to_check(audit_happa_lemma(trace, Md, sched))); break;
  }

  // Rates.
  std::vector<RateFunction> catalog;
  if (const auto which = catalog_for(cfg)) {
    out.catalog = to_string(*which);
    RateParams params;
    params.M = M.value;
    params.rho = cfg.rho;
    params.x0_dist = space.distance(x, fixture.p);
    params.cross = cfg.cross;
    catalog = rate_catalog(*which, params);
  }
  apply_overrides(catalog, cfg.overrides);
  for (const auto& rf : catalog) out.rates.push_back(certify(trace, rf, cfg.k_max));

  CsvBounds bounds{curve_of(catalog, ResidualKind::step), std::nullopt, curve_of(catalog, ResidualKind::cross)};
  bounds.map = curve_of(catalog, cfg.scheme == Scheme::happa ? ResidualKind::family : ResidualKind::map);
  emit_csv(cfg.csv_path, space, trace, bounds);
  out.csv_path = cfg.csv_path.string();
}

}  // namespace detail

/// Builds fixtures, runs the iteration, every audit and every catalog rate,
/// then writes the CSV and JSON summary. Exit code: 0 all checks pass, 1 a
/// mathematical check failed, 2 configuration/fixture/IO error.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary out;
  out.config = cfg.source;
  out.echo = cfg.echo;
  out.scheme = to_string(cfg.scheme);
  if (cfg.hilbert_proximal) out.scheme = "hppa";
  try {
    if (cfg.space == SpaceKind::euclid) {
      detail::run_in_space(Euclid(cfg.dim), cfg, out);
    } else {
      detail::run_in_space(Tripod{}, cfg, out);
    }
    const bool ok = std::all_of(out.audits.begin(), out.audits.end(), [](const auto& a) { return a.passed; }) &&
                    std::all_of(out.rates.begin(), out.rates.end(), [](const auto& r) { return r.passed(); });
    out.exit_code = ok ? kPass : kCheckFailed;
  } catch (const std::exception& e) {
    // ConfigError, FixtureError, InputError and IO failures all land here.
    out.exit_code = kSetupError;
    out.error = e.what();
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!cfg.summary_path.empty()) {
    try {
      if (cfg.summary_path.has_parent_path()) std::filesystem::create_directories(cfg.summary_path.parent_path());
      std::ofstream js(cfg.summary_path);
      js << to_json(out).dump(2) << '\n';
      if (!js) throw std::runtime_error("failed writing " + cfg.summary_path.string());
    } catch (const std::exception& e) {
      out.exit_code = kSetupError;
      out.error = e.what();
    }
  }
  return out;
}

/// load_config + run_experiment; configuration errors become exit code 2.
inline RunSummary run_config_file(const std::filesystem::path& path) {
  try {
    return run_experiment(load_config(path));
  } catch (const ConfigError& e) {
    RunSummary out;
    out.config = path.string();
    out.exit_code = kSetupError;
    out.error = e.what();
    return out;
  }
}

}  // namespace halrate::harness

#endif  // HALRATE_HARNESS_EXPERIMENT_HPP
