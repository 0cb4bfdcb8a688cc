#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qps/gdop.hpp"
#include "qps/geometry.hpp"

namespace qps {

inline constexpr double kEarthRadius = 6378e3;

/// Baselines along the x, y and z axes with endpoints at +-a, sources at the origin.
struct TerrestrialConfig {
  double half_length_a = 2.0;
};

/// Three satellite pairs at distance a from the origin, each b apart.
struct LeoConfig {
  double semi_major_a = 7360e3;
  double baseline_b = 20e3;
};

Constellation<double> build_terrestrial(const TerrestrialConfig& config);
Constellation<double> build_leo(const LeoConfig& config);

struct AxisRange {
  double min = 0;
  double max = 0;
  int count = 2;

  double at(int i) const;
};

enum class Axis { x = 0, y = 1, z = 2 };

std::optional<Axis> parse_axis(std::string_view name);
char axis_name(Axis a);

/// A plane with two swept axes and the remaining coordinate held fixed.
struct PlaneSpec {
  Axis first = Axis::x;
  Axis second = Axis::y;
  double fixed_value = 0;
  AxisRange first_range;
  AxisRange second_range;
};

struct FieldPoint {
  Point3<double> user;
  ErrorEstimate<double> error;
};

struct SweptAxis {
  std::string name;  // CSV column, e.g. "x_m", "distance_m", "a_m"
  AxisRange range;
};

/// Sampled r_xyz field. Points are row-major over `axes`: the last axis
/// varies fastest.
struct FieldGrid {
  std::vector<SweptAxis> axes;
  std::vector<std::pair<std::string, double>> fixed;
  double sigma_s = 0;
  std::vector<FieldPoint> points;

  double axis_value(std::size_t point_index, std::size_t axis) const;
};

/// 0 means hardware concurrency.
struct ScanOptions {
  unsigned threads = 1;
};

/// Single-point error chain as used by every scan. Points on a baseline
/// endpoint or a singular set come back flagged degenerate.
ErrorEstimate<double> evaluate_point(const Constellation<double>& c, const Point3<double>& user, double sigma_s);

FieldGrid scan_plane(const Constellation<double>& c, const PlaneSpec& plane, double sigma_s, const ScanOptions& opt = {});

FieldGrid scan_line(const Constellation<double>& c, const Point3<double>& start, const Point3<double>& end, int count,
                    double sigma_s, const ScanOptions& opt = {});

/// Rebuilds the terrestrial layout for each half-length a and evaluates the user.
FieldGrid scan_baseline_length(const AxisRange& half_lengths, const Point3<double>& user, double sigma_s,
                               const ScanOptions& opt = {});

enum class Figure { fig4, fig5, fig6, fig8, fig9, fig10 };

std::optional<Figure> parse_figure(std::string_view name);

/// Reference dataset for a named preset
/// (a = 2 m terrestrial; a = 7360 km, b = 20 km LEO; sigma_s = 1 um).
FieldGrid reproduce_figure(Figure fig, const ScanOptions& opt = {});

inline constexpr double kReferenceSigmaS = 1e-6;
inline constexpr int kPlaneResolution = 201;
inline constexpr int kLineResolution = 500;

}  // namespace qps
