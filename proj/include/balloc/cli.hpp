#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace balloc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitCheckFailed = 2;

inline constexpr const char* kOutputDirEnv = "BALLOC_OUTPUT_DIR";

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

// Shortest p/q with q ≤ 1000 matching x to 1e-12, else %.6g.
std::string format_fraction(double x);

}  // namespace balloc
