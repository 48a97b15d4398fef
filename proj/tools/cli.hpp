#pragma once

#include <iosfwd>

namespace lexemb {

/// Parses the command line and runs it. Exit status: 0 success, 1 runtime
/// failure, 2 usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lexemb
