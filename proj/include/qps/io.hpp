#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "qps/gdop.hpp"
#include "qps/geometry.hpp"
#include "qps/photonics.hpp"
#include "qps/scenarios.hpp"
#include "qps/solver.hpp"

namespace qps {

using json = nlohmann::json;

/// {"baselines": [{"a": [x,y,z], "b": [x,y,z], "source": [x,y,z]}, x3]}.
/// "source" may be omitted, in which case the baseline midpoint is used.
Constellation<double> constellation_from_json(const json& doc);
json to_json(const Constellation<double>& c);
Constellation<double> load_constellation(const std::filesystem::path& path);

json to_json(const Point3<double>& p);
json to_json(const ErrorEstimate<double>& e);
json to_json(const SolveResult<double>& r);
json to_json(const DipScan& scan);
json to_json(const BalanceEstimate& b);
json to_json(const FieldGrid& grid);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_csv(std::ostream& out, const DipScan& scan);
void write_csv(std::ostream& out, const FieldGrid& grid);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace qps
