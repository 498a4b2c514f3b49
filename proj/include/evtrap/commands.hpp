#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "evtrap/config.hpp"

namespace evtrap {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNoTrap = 3,
  kExitIo = 4,
  kExitNumericAbort = 5,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Derived parameters and trap profile. Throws NoTrapError.
nlohmann::ordered_json characterize_report(const RunConfig& config);

// Each command validates the config, writes its files under config.out and
// returns an exit code; diagnostics go to `err`.
int cmd_characterize(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_potential(const RunConfig& config, std::ostream& err);
int cmd_trajectory(const RunConfig& config, std::ostream& err);
int cmd_ensemble(const RunConfig& config, std::ostream& err);

// Full command line: evtrap <characterize|potential|trajectory|ensemble> [flags].
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace evtrap
