#ifndef HALRATE_HARNESS_CSV_HPP
#define HALRATE_HARNESS_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "halrate/iterations.hpp"
#include "halrate/rates.hpp"

namespace halrate::harness {

/// Bound curves drawn next to the residual columns; any may be absent.
struct CsvBounds {
  std::optional<BoundCurve> step;
  std::optional<BoundCurve> map;
  std::optional<BoundCurve> cross;
};

/// 17 significant digits; reads back to the same double.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Column layout:
///   n, step_residual, map_residual, cross_residual_<m>..., bound_step, bound_map,
///   bound_cross, margin_step, margin_map[, point coordinates]
/// One row per n = 0..N; absent values are empty fields. Point columns
/// (x_0.. for euclid, x_ray,x_t for tripod) appear only when the trace kept its points.
template <WSpace S>
void write_csv(std::ostream& out, const S& space, const Trace<typename S::Point>& t, const CsvBounds& bounds) {
  out << "n,step_residual,map_residual";
  for (const auto& c : t.cross) out << ",cross_residual_" << c.m;
  out << ",bound_step,bound_map,bound_cross,margin_step,margin_map";
  if (t.points_stored) {
    if constexpr (std::is_same_v<S, Tripod>) {
      out << ",x_ray,x_t";
    } else {
      for (std::size_t i = 0; i < space.scalars(); ++i) out << ",x_" << i;
    }
  }
  out << '\n';

  const auto curve_at = [](const std::optional<BoundCurve>& c, std::size_t n) -> std::optional<double> {
    if (!c || n < c->first_n) return std::nullopt;
    return (*c)(n);
  };
  const auto field = [&out](const std::optional<double>& v) {
    out << ',';
    if (v) out << format_real(*v);
  };

  for (std::size_t n = 0; n <= t.horizon; ++n) {
    out << n;
    const std::optional<double> step = n < t.step.size() ? std::optional(t.step[n]) : std::nullopt;
    const std::optional<double> map = n < t.map.size() ? std::optional(t.map[n]) : std::nullopt;
    field(step);
    field(map);
    for (const auto& c : t.cross) field(c.values[n]);
    const auto bstep = curve_at(bounds.step, n);
    const auto bmap = curve_at(bounds.map, n);
    field(bstep);
    field(bmap);
    field(curve_at(bounds.cross, n));
    field(step && bstep ? std::optional(*bstep - *step) : std::nullopt);
    field(map && bmap ? std::optional(*bmap - *map) : std::nullopt);
    if (t.points_stored) {
      for (double v : space.coordinates(t.points[n])) field(v);
    }
    out << '\n';
  }
}

/// Throws std::runtime_error on IO failure.
template <WSpace S>
void emit_csv(const std::filesystem::path& path, const S& space, const Trace<typename S::Point>& t,
              const CsvBounds& bounds) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, space, t, bounds);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace halrate::harness

#endif  // HALRATE_HARNESS_CSV_HPP
