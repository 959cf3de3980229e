#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace chandas::cli {

// Exit codes: 0 success, 1 domain error (dead end, bad corpus, ...), 2 usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chandas::cli
