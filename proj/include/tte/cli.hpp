#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tte::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kProviderBootstrap = 3,
    kSandboxBootstrap = 4,
};

inline constexpr const char* kDefaultSandbox = "cmd:tte-sandbox-runner";

// Entry point shared by the executable and the integration tests; args
// exclude the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace tte::cli
