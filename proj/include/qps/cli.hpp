#pragma once

#include <iosfwd>

namespace qps {

/// Command-line entry point. Results go to `out` (or the --output file);
/// failures are reported on `err` as {"error": <name>, "message": ...}.
/// Returns 0 on success, 1 for domain errors, 2 for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qps
