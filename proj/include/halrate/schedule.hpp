#ifndef HALRATE_SCHEDULE_HPP
#define HALRATE_SCHEDULE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "halrate/error.hpp"

namespace halrate {

/// ceil(1 / (1 - rho)), robust to 1/(1-rho) landing one ulp above an integer
/// (e.g. rho = 0.8 gives 5.000000000000001 in binary floating point).
inline long long inverse_gap_ceil(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must satisfy 0 <= rho < 1");
  const double gap = 1.0 - rho;
  auto c = static_cast<long long>(std::ceil(1.0 / gap));
  if (c > 1 && static_cast<double>(c - 1) * gap >= 1.0 - 1e-12) --c;
  return c;
}

/// Parameter sequences (alpha_n) and, for proximal schemes, (gamma_n).
class Schedule {
 public:
  enum class Kind {
    halpern_prop2,  // alpha_0 = 0, alpha_n = 1 - 2/(n+1)
    lieder,         // alpha_n = 1 - 1/(n+2)
    sam_prop5,      // alpha_n = 1 - 2/((1-rho)(n+J)), J = 2 ceil(1/(1-rho))
    happa_prop9,    // alpha_n = 1 - 2/(n+2), gamma_n = (n+2)/(n+1)
    constant,
    explicit_list,
  };

  static Schedule halpern_prop2() { return Schedule(Kind::halpern_prop2); }
  static Schedule lieder() { return Schedule(Kind::lieder); }
  static Schedule happa_prop9() { return Schedule(Kind::happa_prop9); }

  static Schedule sam_prop5(double rho) {
    Schedule s(Kind::sam_prop5);
    s.rho_ = rho;
    s.J_ = 2 * inverse_gap_ceil(rho);
    return s;
  }

  static Schedule constant(double alpha, std::optional<double> gamma = std::nullopt) {
    Schedule s(Kind::constant);
    check_alpha(alpha);
    if (gamma) check_gamma(*gamma);
    s.alpha_const_ = alpha;
    s.gamma_const_ = gamma;
    return s;
  }

  static Schedule explicit_list(std::vector<double> alpha, std::vector<double> gamma = {}) {
    Schedule s(Kind::explicit_list);
    for (double a : alpha) check_alpha(a);
    for (double g : gamma) check_gamma(g);
    s.alpha_list_ = std::move(alpha);
    s.gamma_list_ = std::move(gamma);
    return s;
  }

  Kind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case Kind::halpern_prop2: return "halpern_prop2";
      case Kind::lieder: return "lieder";
      case Kind::sam_prop5: return "sam_prop5";
      case Kind::happa_prop9: return "happa_prop9";
      case Kind::constant: return "constant";
      case Kind::explicit_list: return "explicit";
    }
    return "?";
  }

  double alpha(std::size_t n) const {
    const auto x = static_cast<double>(n);
    switch (kind_) {
      case Kind::halpern_prop2: return n == 0 ? 0.0 : 1.0 - 2.0 / (x + 1.0);
      case Kind::lieder: return 1.0 - 1.0 / (x + 2.0);
      case Kind::sam_prop5: {
        const double a = 1.0 - 2.0 / ((1.0 - rho_) * (x + static_cast<double>(J_)));
        // alpha_0 is 0 in exact arithmetic; rounding can push it to -1e-16.
        return std::clamp(a, 0.0, 1.0);
      }
      case Kind::happa_prop9: return 1.0 - 2.0 / (x + 2.0);
      case Kind::constant: return alpha_const_;
      case Kind::explicit_list:
        if (n >= alpha_list_.size()) throw InputError("explicit alpha list too short for index " + std::to_string(n));
        return alpha_list_[n];
    }
    return 0.0;
  }

  bool has_gamma() const {
    switch (kind_) {
      case Kind::happa_prop9: return true;
      case Kind::constant: return gamma_const_.has_value();
      case Kind::explicit_list: return !gamma_list_.empty();
      default: return false;
    }
  }

  double gamma(std::size_t n) const {
    switch (kind_) {
      case Kind::happa_prop9: {
        const auto x = static_cast<double>(n);
        return (x + 2.0) / (x + 1.0);
      }
      case Kind::constant:
        if (gamma_const_) return *gamma_const_;
        break;
      case Kind::explicit_list:
        if (n < gamma_list_.size()) return gamma_list_[n];
        if (!gamma_list_.empty()) throw InputError("explicit gamma list too short for index " + std::to_string(n));
        break;
      default: break;
    }
    throw InputError("schedule " + name() + " has no gamma sequence");
  }

  /// The contraction modulus the schedule was built for (sam_prop5 only).
  std::optional<double> rho() const { return kind_ == Kind::sam_prop5 ? std::optional(rho_) : std::nullopt; }

  /// J = 2 ceil(1/(1-rho)) for sam_prop5; 0 otherwise.
  long long J() const { return J_; }

  /// Throws if an explicit list cannot drive a run of `horizon` steps
  /// (alpha_0..alpha_{N-1}, and gamma_0..gamma_N when present).
  void require_horizon(std::size_t horizon) const {
    if (kind_ != Kind::explicit_list) return;
    if (alpha_list_.size() < horizon) {
      throw InputError("explicit alpha list has " + std::to_string(alpha_list_.size()) +
                       " entries, horizon needs " + std::to_string(horizon));
    }
    if (!gamma_list_.empty() && gamma_list_.size() < horizon + 1) {
      throw InputError("explicit gamma list has " + std::to_string(gamma_list_.size()) +
                       " entries, horizon needs " + std::to_string(horizon + 1));
    }
  }

 private:
  explicit Schedule(Kind kind) : kind_(kind) {}

  static void check_alpha(double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("alpha values must lie in [0,1]");
  }
  static void check_gamma(double g) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InputError("gamma values must be > 0");
  }

  Kind kind_;
  double rho_ = 0.0;
  long long J_ = 0;
  double alpha_const_ = 0.0;
  std::optional<double> gamma_const_;
  std::vector<double> alpha_list_;
  std::vector<double> gamma_list_;
};

}  // namespace halrate

#endif  // HALRATE_SCHEDULE_HPP
