#ifndef SPAD_CLI_APP_H_
#define SPAD_CLI_APP_H_

#include <ostream>
#include <string>
#include <vector>

namespace spad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Runs one subcommand. args excludes the program name; the first element
// names the subcommand. Returns the process exit code.
int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace spad::cli

#endif  // SPAD_CLI_APP_H_
