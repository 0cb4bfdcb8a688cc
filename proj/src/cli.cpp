#include "qps/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qps/io.hpp"

namespace qps {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* flag) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    double v = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
      throw UsageError(std::string(flag) + ": cannot parse '" + text + "' as numbers");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  if (out.size() != expected) {
    throw UsageError(std::string(flag) + " expects " + std::to_string(expected) + " comma-separated values");
  }
  return out;
}

Point3<double> parse_point(const std::string& text, const char* flag) {
  const auto v = parse_list(text, 3, flag);
  return {v[0], v[1], v[2]};
}

AxisRange parse_range(const std::string& text, const char* flag) {
  const auto v = parse_list(text, 3, flag);
  const double count = v[2];
  if (count != static_cast<double>(static_cast<int>(count))) throw UsageError(std::string(flag) + ": count must be an integer");
  return {v[0], v[1], static_cast<int>(count)};
}

// Exactly one of --preset or --constellation.
struct ConstellationSource {
  std::string preset;
  std::string path;
  double a = std::numeric_limits<double>::quiet_NaN();
  double b = 20e3;

  void attach(CLI::App* app) {
    auto* p = app->add_option("--preset", preset, "built-in layout")->check(CLI::IsMember({"terrestrial", "leo"}));
    auto* f = app->add_option("--constellation", path, "constellation JSON file");
    p->excludes(f);
    app->add_option("--a", a, "terrestrial half-length or LEO orbit radius, m (defaults 2 / 7360e3)");
    app->add_option("--b", b, "LEO baseline length, m");
  }

  Constellation<double> build() const {
    if (!path.empty()) return load_constellation(path);
    if (preset == "terrestrial") return build_terrestrial({std::isnan(a) ? 2.0 : a});
    if (preset == "leo") return build_leo({std::isnan(a) ? 7360e3 : a, b});
    throw UsageError("one of --preset or --constellation is required");
  }
};

struct Output {
  std::string path;
  std::string format = "csv";

  void attach(CLI::App* app, bool with_format) {
    app->add_option("-o,--output", path, "output file (default stdout)");
    if (with_format) app->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  void emit(std::ostream& out, const std::string& text) const {
    if (path.empty()) {
      out << text;
    } else {
      write_file_atomic(path, text);
    }
  }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string render(const FieldGrid& grid, const std::string& format) {
  if (format == "json") return dump(to_json(grid));
  std::ostringstream s;
  write_csv(s, grid);
  return s.str();
}

ScanOptions scan_options() {
  ScanOptions opt{0};
  if (const char* env = std::getenv("QPS_THREADS")) {
    unsigned n = 0;
    const std::string_view text(env);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), n);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || n == 0) {
      throw UsageError("QPS_THREADS must be a positive integer");
    }
    opt.threads = n;
  }
  return opt;
}

void report(std::ostream& err, std::string_view name, const std::string& message) {
  err << json{{"error", std::string(name)}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interferometric quantum positioning: solver, error analysis and HOM dip simulation", "qps"};
  app.require_subcommand(1);

  // solve
  ConstellationSource solve_src;
  Output solve_out;
  std::string solve_s, solve_guess, solve_region;
  int solve_starts = 64;
  std::uint64_t solve_seed = 1;
  auto* solve = app.add_subcommand("solve", "recover user position from measured delays s1,s2,s3");
  solve_src.attach(solve);
  solve_out.attach(solve, false);
  solve->add_option("--s", solve_s, "delays s1,s2,s3 in meters")->required();
  auto* guess_opt = solve->add_option("--guess", solve_guess, "single start x,y,z");
  auto* region_opt = solve->add_option("--region", solve_region, "multi-start box xmin,ymin,zmin,xmax,ymax,zmax");
  guess_opt->excludes(region_opt);
  solve->add_option("--starts", solve_starts, "multi-start count");
  solve->add_option("--seed", solve_seed, "multi-start seed");

  // dip-scan
  HomConfig hom{1.0, 1.0, 1e4, 3e12};
  Output dip_out;
  double true_offset = 0.5e-3;
  std::string dip_grid;
  double integration_time = 1.0;
  std::uint64_t dip_seed = 1;
  bool no_noise = false;
  bool fit_width = false;
  auto* dip = app.add_subcommand("dip-scan", "simulate a HOM dip scan and fit the balance offset");
  dip->add_option("--alpha1", hom.alpha1, "detector 1 quantum efficiency");
  dip->add_option("--alpha2", hom.alpha2, "detector 2 quantum efficiency");
  dip->add_option("--eta-v-sq", hom.eta_v_sq, "|eta V|^2 |G(0)|^2, counts/s");
  dip->add_option("--delta-omega", hom.delta_omega, "filter bandwidth, rad/s");
  dip->add_option("--true-offset", true_offset, "planted balance offset, m");
  dip->add_option("--grid", dip_grid, "offset grid min,max,count in meters (default +-3 dip widths)");
  dip->add_option("--integration-time", integration_time, "seconds per grid point");
  dip->add_option("--seed", dip_seed, "noise seed");
  dip->add_flag("--no-noise", no_noise, "record exact expected rates");
  dip->add_flag("--fit-width", fit_width, "fit delta_omega as a free parameter");
  dip->add_option("-o,--output", dip_out.path, "output prefix; writes <prefix>.csv and <prefix>.json");

  // gdop
  ConstellationSource gdop_src;
  Output gdop_out;
  std::string gdop_user;
  double gdop_sigma = kReferenceSigmaS;
  auto* gdop = app.add_subcommand("gdop", "position error estimate at one user position");
  gdop_src.attach(gdop);
  gdop_out.attach(gdop, false);
  gdop->add_option("--user", gdop_user, "user x,y,z in meters")->required();
  gdop->add_option("--sigma-s", gdop_sigma, "delay standard deviation, m");

  // field
  ConstellationSource field_src;
  Output field_out;
  std::string plane = "xy", range1, range2;
  double fixed = 0;
  double field_sigma = kReferenceSigmaS;
  auto* field = app.add_subcommand("field", "r_xyz over a coordinate plane");
  field_src.attach(field);
  field_out.attach(field, true);
  field->add_option("--plane", plane, "swept axes, e.g. xy or xz");
  field->add_option("--fixed", fixed, "value of the remaining coordinate, m");
  field->add_option("--range1", range1, "first axis min,max,count")->required();
  field->add_option("--range2", range2, "second axis min,max,count")->required();
  field->add_option("--sigma-s", field_sigma, "delay standard deviation, m");

  // line
  ConstellationSource line_src;
  Output line_out;
  std::string line_start, line_end;
  int line_count = kLineResolution;
  double line_sigma = kReferenceSigmaS;
  auto* line = app.add_subcommand("line", "r_xyz along a segment");
  line_src.attach(line);
  line_out.attach(line, true);
  line->add_option("--start", line_start, "x,y,z")->required();
  line->add_option("--end", line_end, "x,y,z")->required();
  line->add_option("--count", line_count, "samples");
  line->add_option("--sigma-s", line_sigma, "delay standard deviation, m");

  // sweep-a
  Output sweep_out;
  std::string sweep_range, sweep_user;
  double sweep_sigma = kReferenceSigmaS;
  auto* sweep = app.add_subcommand("sweep-a", "r_xyz vs terrestrial half-length a at a fixed user");
  sweep_out.attach(sweep, true);
  sweep->add_option("--a-range", sweep_range, "min,max,count")->required();
  sweep->add_option("--user", sweep_user, "x,y,z")->required();
  sweep->add_option("--sigma-s", sweep_sigma, "delay standard deviation, m");

  // reproduce
  Output repro_out;
  std::string figure;
  auto* repro = app.add_subcommand("reproduce", "reference dataset for a named preset");
  repro->add_option("figure", figure, "fig4|fig5|fig6|fig8|fig9|fig10")
      ->required()
      ->check(CLI::IsMember({"fig4", "fig5", "fig6", "fig8", "fig9", "fig10"}));
  repro_out.attach(repro, true);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return 2;
  }

  try {
    if (solve->parsed()) {
      const auto c = solve_src.build();
      const DelayTriple<double> s = parse_point(solve_s, "--s");
      json candidates = json::array();
      if (!solve_guess.empty()) {
        candidates.push_back(to_json(solve_position(c, s, parse_point(solve_guess, "--guess"))));
      } else if (!solve_region.empty()) {
        const auto r = parse_list(solve_region, 6, "--region");
        const Box<double> box{{r[0], r[1], r[2]}, {r[3], r[4], r[5]}};
        for (const auto& res : multi_start_solve(c, s, box, solve_starts, solve_seed)) candidates.push_back(to_json(res));
      } else {
        throw UsageError("solve needs --guess or --region");
      }
      solve_out.emit(out, dump({{"candidates", candidates}}));
    } else if (dip->parsed()) {
      const double width = speed_of_light<double> / hom.delta_omega;
      const AxisRange g = dip_grid.empty() ? AxisRange{true_offset - 3 * width, true_offset + 3 * width, 41}
                                           : parse_range(dip_grid, "--grid");
      if (g.count < 2) throw UsageError("--grid needs at least two points");
      std::vector<double> grid(static_cast<std::size_t>(g.count));
      for (int i = 0; i < g.count; ++i) grid[static_cast<std::size_t>(i)] = g.at(i);
      const auto scan =
          simulate_dip_scan(hom, true_offset, grid, integration_time, dip_seed, no_noise ? Noise::none : Noise::poisson);
      FitOptions fo;
      fo.fit_width = fit_width;
      const auto est = estimate_balance(scan, hom, fo);
      const json doc{{"estimate", to_json(est)}, {"scan", to_json(scan)}};
      if (!dip_out.path.empty()) {
        std::ostringstream csv;
        write_csv(csv, scan);
        write_file_atomic(dip_out.path + ".csv", csv.str());
        write_file_atomic(dip_out.path + ".json", dump(doc));
      }
      out << dump(doc);
    } else if (gdop->parsed()) {
      const auto c = gdop_src.build();
      const Point3<double> user = parse_point(gdop_user, "--user");
      gdop_out.emit(out, dump(to_json(evaluate_point(c, user, gdop_sigma))));
    } else if (field->parsed()) {
      const auto c = field_src.build();
      if (plane.size() != 2) throw UsageError("--plane takes two axis letters");
      const auto a1 = parse_axis(plane.substr(0, 1));
      const auto a2 = parse_axis(plane.substr(1, 1));
      if (!a1 || !a2 || *a1 == *a2) throw UsageError("--plane takes two distinct letters from x, y, z");
      const PlaneSpec spec{*a1, *a2, fixed, parse_range(range1, "--range1"), parse_range(range2, "--range2")};
      field_out.emit(out, render(scan_plane(c, spec, field_sigma, scan_options()), field_out.format));
    } else if (line->parsed()) {
      const auto c = line_src.build();
      const auto grid = scan_line(c, parse_point(line_start, "--start"), parse_point(line_end, "--end"), line_count,
                                  line_sigma, scan_options());
      line_out.emit(out, render(grid, line_out.format));
    } else if (sweep->parsed()) {
      const auto grid = scan_baseline_length(parse_range(sweep_range, "--a-range"), parse_point(sweep_user, "--user"),
                                             sweep_sigma, scan_options());
      sweep_out.emit(out, render(grid, sweep_out.format));
    } else if (repro->parsed()) {
      repro_out.emit(out, render(reproduce_figure(*parse_figure(figure), scan_options()), repro_out.format));
    }
  } catch (const UsageError& e) {
    report(err, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    report(err, name(e.code()), e.what());
    return 1;
  }
  return 0;
}

}  // namespace qps
