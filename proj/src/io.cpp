#include "qps/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace qps {

namespace {

Point3<double> point_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::invalid_input, std::string(what) + " must be [x, y, z]");
  Point3<double> p;
  for (int i = 0; i < 3; ++i) {
    const auto& v = j[static_cast<std::size_t>(i)];
    if (!v.is_number()) throw Error(Errc::invalid_input, std::string(what) + " has a non-numeric component");
    p(i) = v.get<double>();
  }
  require_finite(p, what);
  return p;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

Constellation<double> constellation_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("baselines") || !doc["baselines"].is_array() || doc["baselines"].size() != 3) {
    throw Error(Errc::invalid_input, "constellation needs exactly three baselines");
  }
  Constellation<double> c;
  for (std::size_t i = 0; i < 3; ++i) {
    const json& bl = doc["baselines"][i];
    if (!bl.is_object() || !bl.contains("a") || !bl.contains("b")) {
      throw Error(Errc::invalid_input, "baseline needs endpoints \"a\" and \"b\"");
    }
    c[i].a = point_from_json(bl["a"], "baseline endpoint a");
    c[i].b = point_from_json(bl["b"], "baseline endpoint b");
    c[i].source = bl.contains("source") ? point_from_json(bl["source"], "baseline source") : (c[i].a + c[i].b) / 2.0;
  }
  validate(c);
  return c;
}

json to_json(const Point3<double>& p) { return json::array({p.x(), p.y(), p.z()}); }

json to_json(const Constellation<double>& c) {
  json bls = json::array();
  for (const auto& bl : c.baselines) {
    bls.push_back({{"a", to_json(bl.a)}, {"b", to_json(bl.b)}, {"source", to_json(bl.source)}});
  }
  return {{"baselines", bls}};
}

Constellation<double> load_constellation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::invalid_input, "cannot open constellation file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw Error(Errc::invalid_input, "constellation file is not valid JSON: " + std::string(e.what()));
  }
  return constellation_from_json(doc);
}

json to_json(const ErrorEstimate<double>& e) {
  return {{"sigma_x_m", nullable(e.sigma_x)},
          {"sigma_y_m", nullable(e.sigma_y)},
          {"sigma_z_m", nullable(e.sigma_z)},
          {"r_xyz_m", nullable(e.r_xyz)},
          {"degenerate", e.degenerate},
          {"condition_number", nullable(e.condition_number)}};
}

json to_json(const SolveResult<double>& r) {
  return {{"position_m", to_json(r.position)},
          {"residual_norm_m", r.residual_norm},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"condition_number", nullable(r.condition_number)}};
}

json to_json(const DipScan& scan) {
  return {{"offset_m", scan.offsets},
          {"rate_hz", scan.rates},
          {"integration_time_s", scan.integration_time},
          {"rng_seed", scan.rng_seed}};
}

json to_json(const BalanceEstimate& b) {
  return {{"offset_m", b.offset},
          {"sigma_s_m", b.sigma_s},
          {"plateau_hz", b.plateau},
          {"delta_omega_rad_s", b.delta_omega},
          {"iterations", b.iterations}};
}

json to_json(const FieldGrid& grid) {
  json axes = json::array();
  for (const auto& a : grid.axes) {
    axes.push_back({{"name", a.name}, {"min", a.range.min}, {"max", a.range.max}, {"count", a.range.count}});
  }
  json fixed = json::object();
  for (const auto& [name, v] : grid.fixed) fixed[name] = v;
  json points = json::array();
  for (const auto& p : grid.points) {
    json e = to_json(p.error);
    e["user_m"] = to_json(p.user);
    points.push_back(std::move(e));
  }
  return {{"axes", axes}, {"fixed", fixed}, {"sigma_s_m", grid.sigma_s}, {"points", points}};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_csv(std::ostream& out, const DipScan& scan) {
  out << "offset_m,rate_hz\n";
  for (std::size_t i = 0; i < scan.offsets.size(); ++i) {
    out << format_double(scan.offsets[i]) << ',' << format_double(scan.rates[i]) << '\n';
  }
}

void write_csv(std::ostream& out, const FieldGrid& grid) {
  for (const auto& a : grid.axes) out << a.name << ',';
  out << "user_x_m,user_y_m,user_z_m,sigma_x_m,sigma_y_m,sigma_z_m,r_xyz_m,degenerate,condition_number\n";
  // Degenerate rows leave the sigma and r_xyz fields empty.
  const auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const auto& p = grid.points[i];
    for (std::size_t k = 0; k < grid.axes.size(); ++k) out << format_double(grid.axis_value(i, k)) << ',';
    out << format_double(p.user.x()) << ',' << format_double(p.user.y()) << ',' << format_double(p.user.z()) << ','
        << cell(p.error.sigma_x) << ',' << cell(p.error.sigma_y) << ',' << cell(p.error.sigma_z) << ','
        << cell(p.error.r_xyz) << ',' << (p.error.degenerate ? 1 : 0) << ','
        << format_double(p.error.condition_number) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::invalid_input, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(Errc::invalid_input, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::invalid_input, "cannot move output into place at " + path.string());
  }
}

}  // namespace qps
