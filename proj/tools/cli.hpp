#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace simlr::cli {

// Entry point shared by the executable and the tests.  `args` excludes the
// program name.  Returns 0 on success, 1 on data errors, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simlr::cli
