#ifndef WOESB_CLI_HPP
#define WOESB_CLI_HPP

#include <iosfwd>

namespace woesb::cli {

// Entry point shared by the binary and the tests. Tabular results go to
// `out`, diagnostics to `err`. Returns 0 on success, 1 on data or model
// errors, 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace woesb::cli

#endif
