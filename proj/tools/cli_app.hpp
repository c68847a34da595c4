#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace copte::cli {

// Exit codes: 0 success, 1 computation or input error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace copte::cli
