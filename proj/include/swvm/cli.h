#ifndef SWVM_CLI_H_
#define SWVM_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace swvm::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBadConfig = 2;  // bad flag or config key, missing input
inline constexpr int kBadInput = 3;   // corpus parse error, misaligned files
inline constexpr int kBadModel = 4;   // model checksum mismatch

// Runs one command; args excludes the program name. Data goes to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swvm::cli

#endif  // SWVM_CLI_H_
