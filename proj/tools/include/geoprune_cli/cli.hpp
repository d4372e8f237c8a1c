#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geoprune::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a pipeline error and 2 on
/// a usage error. Reports go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geoprune::cli
