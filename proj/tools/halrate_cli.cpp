// Command-line harness: run experiment configs, sweep the Sabach-Shtern
// oracle, audit the geodesic-space axioms.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <thread>
#include <vector>

#include "halrate/harness/experiment.hpp"
#include "halrate/rates.hpp"
#include "halrate/spaces.hpp"

namespace fs = std::filesystem;
using namespace halrate;
using namespace halrate::harness;

namespace {

void print_summary(const RunSummary& s, bool verbose) {
  const char* verdict = s.exit_code == kPass ? "PASS" : (s.exit_code == kCheckFailed ? "FAIL" : "ERROR");
  std::printf("%-5s %s", verdict, s.config.c_str());
  if (s.exit_code == kSetupError) {
    std::printf("\n      %s\n", s.error.c_str());
    return;
  }
  std::printf("  [%s, M=%lld, p=%s (%s), %.2fs]\n", s.scheme.c_str(), s.M, s.fixture_p.c_str(),
              s.provenance.c_str(), s.wall_seconds);
  for (const auto& a : s.audits) {
    if (!verbose && a.passed) continue;
    std::printf("      audit %-28s %s  checked=%zu failures=%zu worst_slack=%.3g\n", a.name.c_str(),
                a.passed ? "ok  " : "FAIL", a.checked, a.failures, a.worst_slack);
    for (const auto& w : a.witnesses) std::printf("        witness %s\n", w.dump().c_str());
  }
  for (const auto& r : s.rates) {
    if (!verbose && r.passed()) continue;
    std::printf("      rate  %-28s %s  rate=%d curve=%d identity=%d checked_k=%zu unchecked_k=%zu\n", r.name.c_str(),
                r.passed() ? "ok  " : "FAIL", r.rate_ok, r.curve_ok, r.identity_ok, r.checked_k, r.unchecked_k);
    if (r.rate_witness) {
      std::printf("        witness k=%zu n=%zu b_n=%.17g > 1/(k+1)=%.17g\n", r.rate_witness->k, r.rate_witness->n,
                  r.rate_witness->value, r.rate_witness->threshold);
    }
    if (r.curve_witness) {
      std::printf("        witness n=%zu b_n=%.17g > bound=%.17g\n", r.curve_witness->n, r.curve_witness->value,
                  r.curve_witness->threshold);
    }
    if (!r.identity_ok) {
      if (r.identity_residual > kCertifySlack) {
        std::printf("        bound curve at phi(k) exceeds 1/(k+1) by %.3g\n", r.identity_residual);
      } else {
        std::printf("        bound curve at phi(k) differs from 1/(k+1); phi is not its inverse\n");
      }
    }
  }
}

int cmd_run(const std::string& path, bool verbose) {
  const auto s = run_config_file(path);
  print_summary(s, verbose);
  return s.exit_code;
}

int cmd_suite(const std::string& dir, unsigned jobs, bool verbose) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    std::fprintf(stderr, "suite: %s is not a directory\n", dir.c_str());
    return kSetupError;
  }
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".cfg") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    std::fprintf(stderr, "suite: no *.cfg files in %s\n", dir.c_str());
    return kSetupError;
  }

  std::vector<RunSummary> results(configs.size());
  jobs = std::max(1u, jobs);
  for (std::size_t begin = 0; begin < configs.size(); begin += jobs) {
    const std::size_t end = std::min(configs.size(), begin + jobs);
    std::vector<std::future<RunSummary>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, [path = configs[i]] { return run_config_file(path); }));
    }
    for (std::size_t i = begin; i < end; ++i) results[i] = batch[i - begin].get();
  }

  int code = kPass;
  std::size_t passed = 0;
  for (const auto& s : results) {
    print_summary(s, verbose);
    if (s.exit_code == kPass) ++passed;
    if (s.exit_code == kSetupError) code = kSetupError;
    if (s.exit_code == kCheckFailed && code == kPass) code = kCheckFailed;
  }
  std::printf("suite: %zu/%zu configs passed\n", passed, results.size());
  return code;
}

int cmd_sabach_shtern(std::size_t count, std::size_t horizon, std::uint64_t seed) {
  const auto sweep = sabach_shtern_sweep(count, horizon, seed);
  std::printf("instances            %zu (seed %llu, horizon %zu)\n", sweep.instances,
              static_cast<unsigned long long>(seed), horizon);
  std::printf("hypothesis held      %zu\n", sweep.hypothesis_held);
  std::printf("counterexamples      %zu\n", sweep.counterexamples);
  std::printf("worst bound margin   %.3g\n", sweep.worst_conclusion_margin);
  std::printf("equality witness     max |s_n - 2/(n+2)| = %.3g\n", sweep.witness_max_error);
  std::printf("%s\n", sweep.passed() ? "PASS" : "FAIL");
  return sweep.passed() ? kPass : kCheckFailed;
}

int cmd_audit_space(const std::string& kind, std::size_t dim, std::size_t samples, std::uint64_t seed) {
  const auto report_out = [](const AuditReport& r) {
    std::printf("%-16s %s  checked=%zu failures=%zu worst_slack=%.3g seed=%llu\n", r.subject.c_str(),
                r.passed() ? "PASS" : "FAIL", r.checked, r.failures, r.worst_slack,
                static_cast<unsigned long long>(r.seed));
    for (const auto& v : r.violations) std::printf("  witness %s sample=%zu slack=%.3g\n", v.check.c_str(), v.index, v.slack);
    return r.passed();
  };
  bool ok = true;
  if (kind == "euclid") {
    const Euclid space(dim);
    const auto s = make_axiom_samples(space, samples, seed);
    ok &= report_out(axiom_audit(space, std::span<const AxiomSample<Euclid::Point>>(s), seed));
    ok &= report_out(metric_audit(space, std::span<const AxiomSample<Euclid::Point>>(s), false));
  } else if (kind == "tripod") {
    const Tripod space;
    const auto s = make_axiom_samples(space, samples, seed);
    ok &= report_out(axiom_audit(space, std::span<const AxiomSample<TripodPoint>>(s), seed));
    ok &= report_out(metric_audit(space, std::span<const AxiomSample<TripodPoint>>(s), true));
  } else {
    std::fprintf(stderr, "audit-space: unknown kind `%s` (euclid | tripod)\n", kind.c_str());
    return kSetupError;
  }
  return ok ? kPass : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify linear rates of asymptotic regularity for Halpern-type iterations"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print every audit and rate, not only failures");

  std::string config;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config, "Config file")->required();

  std::string dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* suite = app.add_subcommand("suite", "Run every *.cfg in a directory");
  suite->add_option("dir", dir, "Fixture directory")->required();
  suite->add_option("-j,--jobs", jobs, "Concurrent runs");

  bool demo = false;
  std::size_t count = 1000;
  std::size_t horizon = 10000;
  std::uint64_t seed = 42;
  auto* ss = app.add_subcommand("sabach-shtern", "Property sweep of the Sabach-Shtern lemma oracle");
  ss->add_flag("--demo", demo, "Run the seeded sweep plus the equality witness")->required();
  ss->add_option("--count", count, "Random instances");
  ss->add_option("--horizon", horizon, "Sequence length");
  ss->add_option("--seed", seed, "Generator seed");

  std::string kind;
  std::size_t dim = 2;
  std::size_t samples = 1000;
  std::uint64_t audit_seed = 42;
  auto* audit = app.add_subcommand("audit-space", "Check (W1)-(W4) and the metric axioms on random samples");
  audit->add_option("kind", kind, "euclid | tripod")->required();
  audit->add_option("--dim", dim, "Euclidean dimension");
  audit->add_option("--samples", samples, "Number of samples");
  audit->add_option("--seed", audit_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kSetupError;
  }

  try {
    if (*run) return cmd_run(config, verbose);
    if (*suite) return cmd_suite(dir, jobs, verbose);
    if (*ss) return cmd_sabach_shtern(count, horizon, seed);
    if (*audit) return cmd_audit_space(kind, dim, samples, audit_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSetupError;
  }
  return kSetupError;
}
