#include "qps/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace qps {

Constellation<double> build_terrestrial(const TerrestrialConfig& config) {
  const double a = config.half_length_a;
  if (!(a > 0) || !std::isfinite(a)) throw Error(Errc::invalid_input, "terrestrial half-length a must be positive");
  Constellation<double> c;
  for (int i = 0; i < 3; ++i) {
    const Point3<double> e = a * Point3<double>::Unit(i);
    c[static_cast<std::size_t>(i)] = {e, -e, Point3<double>::Zero()};
  }
  return c;
}

Constellation<double> build_leo(const LeoConfig& config) {
  const double a = config.semi_major_a;
  const double b = config.baseline_b;
  if (!(b > 0) || !(a > b) || !std::isfinite(a)) throw Error(Errc::invalid_input, "LEO layout needs a > b > 0");
  const double h = b / 2.0;
  const double q = b / (2.0 * std::sqrt(2.0));
  return {{make_baseline<double>({a, -h, 0}, {a, h, 0}), make_baseline<double>({h, a, 0}, {-h, a, 0}),
           make_baseline<double>({-q, -q, a}, {q, q, a})}};
}

double AxisRange::at(int i) const {
  if (count == 1) return min;
  if (i == count - 1) return max;
  return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::optional<Axis> parse_axis(std::string_view name) {
  if (name == "x") return Axis::x;
  if (name == "y") return Axis::y;
  if (name == "z") return Axis::z;
  return std::nullopt;
}

char axis_name(Axis a) { return "xyz"[static_cast<int>(a)]; }

double FieldGrid::axis_value(std::size_t point_index, std::size_t axis) const {
  std::size_t stride = 1;
  for (std::size_t k = axis + 1; k < axes.size(); ++k) stride *= static_cast<std::size_t>(axes[k].range.count);
  const auto n = static_cast<std::size_t>(axes[axis].range.count);
  return axes[axis].range.at(static_cast<int>((point_index / stride) % n));
}

ErrorEstimate<double> evaluate_point(const Constellation<double>& c, const Point3<double>& user, double sigma_s) {
  try {
    return evaluate_error(c, user, sigma_s);
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_input || !all_finite(user)) throw;
    // User sits on an endpoint: the delay gradient is undefined there.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, true, std::numeric_limits<double>::infinity()};
  }
}

namespace {

void validate_range(const AxisRange& r, const char* what) {
  if (r.count < 2 || !std::isfinite(r.min) || !std::isfinite(r.max)) {
    throw Error(Errc::invalid_input, std::string(what) + " needs count >= 2 and finite bounds");
  }
}

void validate_sigma(double sigma_s) {
  if (!(sigma_s >= 0) || !std::isfinite(sigma_s)) throw Error(Errc::invalid_input, "sigma_s must be nonnegative");
}

unsigned resolve_threads(const ScanOptions& opt) {
  unsigned n = opt.threads == 0 ? std::thread::hardware_concurrency() : opt.threads;
  return std::max(n, 1u);
}

// Each index is written by exactly one worker, so the result does not depend
// on scheduling.
void parallel_for(std::size_t n, const ScanOptions& opt, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(resolve_threads(opt), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

FieldGrid scan_plane(const Constellation<double>& c, const PlaneSpec& plane, double sigma_s, const ScanOptions& opt) {
  validate(c);
  validate_sigma(sigma_s);
  validate_range(plane.first_range, "first plane axis");
  validate_range(plane.second_range, "second plane axis");
  if (plane.first == plane.second) throw Error(Errc::invalid_input, "plane axes must differ");
  const int fixed_axis = 3 - static_cast<int>(plane.first) - static_cast<int>(plane.second);

  FieldGrid grid;
  grid.axes = {{std::string(1, axis_name(plane.first)) + "_m", plane.first_range},
               {std::string(1, axis_name(plane.second)) + "_m", plane.second_range}};
  grid.fixed = {{std::string(1, "xyz"[fixed_axis]) + "_m", plane.fixed_value}};
  grid.sigma_s = sigma_s;

  const auto n1 = static_cast<std::size_t>(plane.first_range.count);
  const auto n2 = static_cast<std::size_t>(plane.second_range.count);
  grid.points.resize(n1 * n2);
  parallel_for(grid.points.size(), opt, [&](std::size_t idx) {
    Point3<double> u;
    u(static_cast<int>(plane.first)) = plane.first_range.at(static_cast<int>(idx / n2));
    u(static_cast<int>(plane.second)) = plane.second_range.at(static_cast<int>(idx % n2));
    u(fixed_axis) = plane.fixed_value;
    grid.points[idx] = {u, evaluate_point(c, u, sigma_s)};
  });
  return grid;
}

FieldGrid scan_line(const Constellation<double>& c, const Point3<double>& start, const Point3<double>& end, int count,
                    double sigma_s, const ScanOptions& opt) {
  validate(c);
  validate_sigma(sigma_s);
  require_finite(start, "line start");
  require_finite(end, "line end");
  const AxisRange along{0.0, (end - start).norm(), count};
  validate_range(along, "line");

  FieldGrid grid;
  grid.axes = {{"distance_m", along}};
  grid.fixed = {{"start_x_m", start.x()}, {"start_y_m", start.y()}, {"start_z_m", start.z()},
                {"end_x_m", end.x()},     {"end_y_m", end.y()},     {"end_z_m", end.z()}};
  grid.sigma_s = sigma_s;
  grid.points.resize(static_cast<std::size_t>(count));
  parallel_for(grid.points.size(), opt, [&](std::size_t i) {
    const double t = AxisRange{0.0, 1.0, count}.at(static_cast<int>(i));
    const Point3<double> u = i + 1 == grid.points.size() ? end : Point3<double>(start + t * (end - start));
    grid.points[i] = {u, evaluate_point(c, u, sigma_s)};
  });
  return grid;
}

FieldGrid scan_baseline_length(const AxisRange& half_lengths, const Point3<double>& user, double sigma_s,
                               const ScanOptions& opt) {
  validate_sigma(sigma_s);
  validate_range(half_lengths, "half-length range");
  require_finite(user, "user position");
  if (!(half_lengths.min > 0) || !(half_lengths.max > 0)) throw Error(Errc::invalid_input, "half-lengths must be positive");

  FieldGrid grid;
  grid.axes = {{"a_m", half_lengths}};
  grid.fixed = {{"x_m", user.x()}, {"y_m", user.y()}, {"z_m", user.z()}};
  grid.sigma_s = sigma_s;
  grid.points.resize(static_cast<std::size_t>(half_lengths.count));
  parallel_for(grid.points.size(), opt, [&](std::size_t i) {
    const auto c = build_terrestrial({half_lengths.at(static_cast<int>(i))});
    grid.points[i] = {user, evaluate_point(c, user, sigma_s)};
  });
  return grid;
}

std::optional<Figure> parse_figure(std::string_view name) {
  if (name == "fig4") return Figure::fig4;
  if (name == "fig5") return Figure::fig5;
  if (name == "fig6") return Figure::fig6;
  if (name == "fig8") return Figure::fig8;
  if (name == "fig9") return Figure::fig9;
  if (name == "fig10") return Figure::fig10;
  return std::nullopt;
}

FieldGrid reproduce_figure(Figure fig, const ScanOptions& opt) {
  const double z_terr = 100.0 / std::sqrt(3.0);
  const double z_leo = kEarthRadius / std::sqrt(3.0);
  const auto terrestrial = build_terrestrial({2.0});
  const auto leo = build_leo({});
  // Plane extents are twice the diagonal test point so that it falls on a
  // grid node (index 150 of 201).
  switch (fig) {
    case Figure::fig4: {
      const AxisRange r{-2 * z_terr, 2 * z_terr, kPlaneResolution};
      return scan_plane(terrestrial, {Axis::x, Axis::y, z_terr, r, r}, kReferenceSigmaS, opt);
    }
    case Figure::fig5:
      return scan_line(terrestrial, {-100.0, 30.0, z_terr}, {100.0, 30.0, z_terr}, kLineResolution, kReferenceSigmaS, opt);
    case Figure::fig6:
      return scan_baseline_length({0.5, 5.0, kLineResolution}, {30.0, 30.0, z_terr}, kReferenceSigmaS, opt);
    case Figure::fig8: {
      const AxisRange r{-2 * z_leo, 2 * z_leo, kPlaneResolution};
      return scan_plane(leo, {Axis::x, Axis::y, z_leo, r, r}, kReferenceSigmaS, opt);
    }
    case Figure::fig9:
      return scan_line(leo, {-2 * kEarthRadius, z_leo, z_leo}, {2 * kEarthRadius, z_leo, z_leo}, kLineResolution,
                       kReferenceSigmaS, opt);
    case Figure::fig10: {
      const Point3<double> dir = Point3<double>::Ones().normalized();
      return scan_line(leo, kEarthRadius * dir, 15000e3 * dir, kLineResolution, kReferenceSigmaS, opt);
    }
  }
  throw Error(Errc::invalid_input, "unknown figure");
}

}  // namespace qps
