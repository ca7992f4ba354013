#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "heatlab/error.hpp"

namespace heatlab {

/// 0 pass, 1 bound violation, 2 usage / parse / input error, 3 numerical failure.
int exit_code_for(ErrorKind kind);

/// Full command-line front end; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Text appended to --help: manifold catalog and bound selectors.
std::string help_footer();

}  // namespace heatlab
