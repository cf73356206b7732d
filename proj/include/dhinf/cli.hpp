#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dhinf {

/// Command-line front end: norm, abscissa, synthesize, sigma.
///
/// Exit codes: 0 success, 1 bad input or usage, 2 unstable closed loop,
/// 3 synthesis failure, 4 numerical failure (iteration caps).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dhinf
