#pragma once

#include <string>
#include <vector>

namespace rainlab {

// Full command-line entry point; args exclude the program name.  Returns the
// process exit code: 0 success, 2 bad arguments or config, 3 I/O or file
// format failure, 4 data contract failure, 1 anything else.
int run_command(const std::vector<std::string>& args);

}  // namespace rainlab
