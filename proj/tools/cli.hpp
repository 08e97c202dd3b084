#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gcil::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kRuntimeError = 3,
  kVerificationFailed = 4,
};

/// Entry point of the gcil tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace gcil::cli
