// Acceptance run: one PASS/FAIL line per criterion, exit 0 only if all pass.
//
//   acceptance <fixture-dir> [output-dir]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "halrate/halrate.hpp"
#include "halrate/harness/experiment.hpp"
#include "oracles.hpp"

using namespace halrate;
using namespace halrate::harness;
namespace fs = std::filesystem;

namespace {

fs::path g_fixtures;
fs::path g_output;

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

RunSummary run_fixture(const fs::path& cfg_path) {
  auto cfg = load_config(cfg_path);
  cfg.csv_path = g_output / (cfg_path.stem().string() + ".csv");
  cfg.summary_path = g_output / (cfg_path.stem().string() + ".summary.json");
  return run_experiment(cfg);
}

const CheckResult* find_audit(const RunSummary& s, const std::string& prefix) {
  for (const auto& a : s.audits) {
    if (a.name.rfind(prefix, 0) == 0) return &a;
  }
  return nullptr;
}

const RateReport* find_rate(const RunSummary& s, const std::string& name) {
  for (const auto& r : s.rates) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

/// Runs a fixture and requires exit 0, the named audits and the named rates.
void expect_fixture(Outcome& out, const std::string& file, const std::vector<std::string>& audits,
                    const std::vector<std::string>& rates, bool need_curves, bool every_k = false,
                    double time_limit = 0.0) {
  const auto s = run_fixture(g_fixtures / file);
  if (s.exit_code != kPass) {
    out.fail(file + ": exit " + std::to_string(s.exit_code) + (s.error.empty() ? "" : " (" + s.error + ")"));
    return;
  }
  if (time_limit > 0.0 && s.wall_seconds > time_limit) out.fail(file + ": took " + std::to_string(s.wall_seconds) + " s");
  for (const auto& a : audits) {
    const auto* r = find_audit(s, a);
    if (!r || !r->passed) out.fail(file + ": audit " + a + (r ? " failed" : " missing"));
  }
  for (const auto& name : rates) {
    const auto* r = find_rate(s, name);
    if (!r) {
      out.fail(file + ": rate " + name + " missing");
      continue;
    }
    if (!r->passed()) out.fail(file + ": rate " + name + " failed");
    if (r->checked_k == 0) out.fail(file + ": rate " + name + " checked no k");
    if (every_k && r->unchecked_k != 0) out.fail(file + ": rate " + name + " left k unchecked");
    if (need_curves && r->worst_curve_slack == std::numeric_limits<double>::infinity()) {
      out.fail(file + ": rate " + name + " has no bound curve");
    }
  }
}

Outcome sabach_shtern() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  const auto sweep = sabach_shtern_sweep(1000, 10'000, 20240901);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (sweep.hypothesis_held != 1000) out.fail("hypothesis held for " + std::to_string(sweep.hypothesis_held) + "/1000");
  if (sweep.counterexamples != 0) out.fail(std::to_string(sweep.counterexamples) + " counterexamples");
  if (sweep.witness_max_error > 1e-12) out.fail("equality witness off by " + std::to_string(sweep.witness_max_error));
  if (secs >= 10.0) out.fail("took " + std::to_string(secs) + " s");
  char buf[128];
  std::snprintf(buf, sizeof buf, "1000 instances, 0 counterexamples, witness error %.2g, %.2f s", sweep.witness_max_error,
                secs);
  if (out.ok) out.detail = buf;
  return out;
}

Outcome halpern() {
  Outcome out;
  for (const char* f : {"halpern_r1_negation.cfg", "halpern_r2_rotation.cfg", "halpern_tripod_rayswap.cfg"}) {
    expect_fixture(out, f, {"bounded/", "lemma/"}, {"halpern.step", "halpern.map"}, false, true, 5.0);
  }
  // The rate constants themselves.
  for (long long M : {1LL, 4LL}) {
    const auto c = rate_catalog(Catalog::halpern_prop2, {M, 0.0, 0.0, {}});
    for (std::size_t k = 0; k <= 50; ++k) {
      if (c[0].phi(k) != static_cast<std::size_t>(8 * M * static_cast<long long>(k + 1) - 1) ||
          c[1].phi(k) != static_cast<std::size_t>(16 * M * static_cast<long long>(k + 1) - 1)) {
        out.fail("catalog constants differ from 8M(k+1)-1 / 16M(k+1)-1");
      }
    }
  }
  if (out.ok) out.detail = "R negation, R^2 rotation, tripod ray-swap certified at N = 10^4, k_max = 50";
  return out;
}

Outcome lieder() {
  Outcome out;
  for (const char* f : {"lieder_r1_negation.cfg", "lieder_r2_rotation.cfg"}) {
    expect_fixture(out, f, {"bounded/"}, {"lieder.map"}, true);
    const auto cfg = load_config(g_fixtures / f);
    if (cfg.u != cfg.x) out.fail(std::string(f) + ": u != x");
  }
  if (out.ok) out.detail = "||x_n - T x_n|| <= 2||x_0 - p||/(n+1) for 1 <= n <= 10^4 on R and R^2";
  return out;
}

Outcome sam() {
  Outcome out;
  for (const char* f : {"sam_r2_rho0.cfg", "sam_r2_rho05.cfg", "sam_r2_rho09.cfg", "sam_tripod_rho05.cfg"}) {
    expect_fixture(out, f, {"bounded/", "lemma/sam"}, {"sam.step", "sam.map"}, true);
  }
  expect_fixture(out, "halpern_constant_f_corollary.cfg", {"bounded/", "lemma/halpern"}, {"sam.step", "sam.map"}, true);
  for (long long M : {1LL, 3LL, 7LL}) {
    const auto c = rate_catalog(Catalog::sam, {M, 0.0, 0.0, {}});
    for (std::size_t k = 0; k <= 100; ++k) {
      const auto k1 = static_cast<long long>(k + 1);
      if (c[0].phi(k) != static_cast<std::size_t>(4 * M * k1 - 2) || c[1].phi(k) != static_cast<std::size_t>(8 * M * k1 - 2)) {
        out.fail("rho = 0 rates differ from 4M(k+1)-2 / 8M(k+1)-2");
      }
    }
  }
  if (out.ok) out.detail = "rho in {0, 0.5, 0.9}: bounds, per-step inequalities and the constant-f corollary hold";
  return out;
}

Outcome aim() {
  Outcome out;
  for (const char* f : {"aim_r2_rho0.cfg", "aim_r2_rho05.cfg", "aim_r2_rho09.cfg"}) {
    expect_fixture(out, f, {"bounded/", "lemma/aim"}, {"sam.step", "sam.map"}, true);
    const auto s = run_fixture(g_fixtures / f);
    if (s.catalog != "sam") out.fail(std::string(f) + ": certified against " + s.catalog);
  }
  if (out.ok) out.detail = "rho in {0, 0.5, 0.9}: per-step inequalities hold, SAM catalog certifies AIM traces";
  return out;
}

Outcome happa() {
  Outcome out;
  const std::vector<std::string> rates{"happa.step", "happa.family", "happa.cross[0]", "happa.cross[5]",
                                       "happa.cross[10000]"};
  for (const char* f : {"happa_r1_identity.cfg", "hppa_r2_psd.cfg", "hppa_r3_l1.cfg", "happa_tripod_quadratic.cfg"}) {
    expect_fixture(out, f, {"c1/", "bounded/", "lemma/happa", "lipschitz/"}, rates, true);
  }
  if (out.ok) out.detail = "identity on R, [[2,1],[1,2]] on R^2, l1 on R^3, quadratic on the tripod";
  return out;
}

Outcome axioms() {
  Outcome out;
  const auto plane = axiom_audit(Euclid(2), 1000, 42);
  const auto tripod = axiom_audit(Tripod{}, 1000, 42);
  if (!plane.passed()) out.fail("euclid R^2: " + std::to_string(plane.failures) + " violations");
  if (!tripod.passed()) out.fail("tripod: " + std::to_string(tripod.failures) + " violations");
  const Tripod t;
  Rng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto p = t.sample(rng, 10.0);
    const auto q = t.sample(rng, 10.0);
    const double l = rng.uniform();
    const auto m = t.combine(p, q, l);
    const auto s = oracle::geodesic_scan({p.ray(), p.t()}, {q.ray(), q.t()}, l);
    worst = std::max(worst, oracle::tree_distance({m.ray(), m.t()}, s));
  }
  if (worst > 1e-10) out.fail("combine vs geodesic scan: " + std::to_string(worst));
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu + %zu axiom checks, geodesic-scan agreement %.2g on 200 samples", plane.checked,
                tripod.checked, worst);
  if (out.ok) out.detail = buf;
  return out;
}

Outcome falsification() {
  Outcome out;
  std::size_t flipped = 0;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(g_fixtures / "falsify")) {
    if (e.path().extension() == ".cfg") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  for (const auto& path : configs) {
    const auto s = run_fixture(path);
    if (s.exit_code != kCheckFailed) {
      out.fail(path.filename().string() + ": exit " + std::to_string(s.exit_code));
      continue;
    }
    bool witnessed = false;
    for (const auto& r : s.rates) {
      if (!r.passed() && (r.rate_witness || r.curve_witness || !r.identity_ok)) witnessed = true;
    }
    if (!witnessed) {
      out.fail(path.filename().string() + ": no witness");
      continue;
    }
    ++flipped;
  }
  if (flipped < 3) out.fail("only " + std::to_string(flipped) + " corruptions flipped");
  if (out.ok) out.detail = std::to_string(flipped) + "/" + std::to_string(configs.size()) + " corruptions exit 1 with a witness";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <fixture-dir> [output-dir]\n", argv[0]);
    return 2;
  }
  g_fixtures = argv[1];
  g_output = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "halrate_acceptance";
  fs::create_directories(g_output);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sabach-shtern oracle", sabach_shtern},
      {"halpern rates", halpern},
      {"lieder bound", lieder},
      {"sam bounds and rates", sam},
      {"aim per-step and rates", aim},
      {"happa/hppa families", happa},
      {"space axioms", axioms},
      {"falsification paths", falsification},
  };

  int failed = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %d. %-24s %6.2fs  %s\n", o.ok ? "PASS" : "FAIL", index, name, secs, o.detail.c_str());
    if (!o.ok) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
