#ifndef HALRATE_AUDIT_HPP
#define HALRATE_AUDIT_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace halrate {

/// One failed inequality. `slack` is rhs - lhs (negative on failure).
struct Violation {
  std::string check;
  std::size_t index = 0;
  double slack = 0.0;
};

/// Result of evaluating a batch of inequalities/identities.
///
/// Every evaluation is recorded as a slack value (rhs - lhs for `lhs <= rhs`,
/// -|lhs - rhs| for identities); it fails when slack < -tolerance.
struct AuditReport {
  static constexpr std::size_t kMaxWitnesses = 16;

  std::string subject;
  std::uint64_t seed = 0;
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::string worst_check;
  std::size_t worst_index = 0;
  std::vector<Violation> violations;

  explicit AuditReport(std::string subject_name = {}, std::uint64_t seed_value = 0)
      : subject(std::move(subject_name)), seed(seed_value) {}

  bool passed() const { return failures == 0; }

  void record(std::string_view check, std::size_t index, double slack, double tolerance) {
    ++checked;
    if (slack < worst_slack) {
      worst_slack = slack;
      worst_check = std::string(check);
      worst_index = index;
    }
    if (!(slack >= -tolerance)) {
      ++failures;
      if (violations.size() < kMaxWitnesses) violations.push_back({std::string(check), index, slack});
    }
  }

  void record_inequality(std::string_view check, std::size_t index, double lhs, double rhs,
                         double tolerance) {
    record(check, index, rhs - lhs, tolerance);
  }

  void record_identity(std::string_view check, std::size_t index, double lhs, double rhs,
                       double tolerance) {
    record(check, index, -std::abs(lhs - rhs), tolerance);
  }

  void merge(const AuditReport& other) {
    checked += other.checked;
    failures += other.failures;
    if (other.worst_slack < worst_slack) {
      worst_slack = other.worst_slack;
      worst_check = other.worst_check;
      worst_index = other.worst_index;
    }
    for (const auto& v : other.violations) {
      if (violations.size() >= kMaxWitnesses) break;
      violations.push_back(v);
    }
  }
};

}  // namespace halrate

#endif  // HALRATE_AUDIT_HPP
