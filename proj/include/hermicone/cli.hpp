#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hermicone {

struct RunConfig {
  std::string subcommand;
  std::string model_file;
  std::string catalog_name;
  std::string metric = "identity";  // file path, "identity" or "random" (uses seed)
  std::string functional;           // empty: subcommand default
  std::string nu = "identity";
  std::optional<double> tol;
  std::uint64_t seed = 1;
  int steps = 0;  // 0: subcommand default
  std::string out;
  std::string format = "json";
};

/// Worker threads for batteries: HERMICONE_THREADS when set, else the hardware count.
int thread_budget();

/// Runs one `hermicone` invocation; args exclude the program name.
/// Returns the process exit code (see exit_code_for).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hermicone
