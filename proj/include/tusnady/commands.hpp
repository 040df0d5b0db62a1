#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tusnady/binomial_exact.hpp"
#include "tusnady/report.hpp"

namespace tusnady {

enum class Command { llt, continuity, corollary, tusnady, constants, figure1 };
enum class OutputFormat { csv, json };

std::optional<Command> parse_command(const std::string& name);

struct RunConfig {
  Command command = Command::constants;
  std::vector<std::int64_t> m_list;  // empty: per-command default
  std::vector<Rational> x_list;      // empty: per-command default
  std::optional<double> tau;         // empty: minimal tau for each x
  std::optional<int> z_points;       // tusnady grid size / corollary t count
  std::uint64_t seed = 1;
  std::string output_path;           // empty: stdout
  OutputFormat format = OutputFormat::csv;
  unsigned workers = 1;
  bool strict = false;
};

/// Fills empty lists with the command's defaults.
RunConfig with_defaults(RunConfig config);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int bound_failure = 1;
inline constexpr int usage = 2;
inline constexpr int oracle_failure = 3;
}  // namespace exit_code

/// 3 if an oracle_instrument record failed, else 1 if a paper_bound record
/// failed (or a regression_guard record under strict), else 0.
int exit_code_for(const VerificationReport& report, bool strict);

struct CommandResult {
  int exit_code = 0;
  VerificationReport report;
  std::string output;  // rendered CSV/JSON (figure1: the series)
};

/// Runs one command. Oracle evaluation errors are converted into a failing
/// "oracle.error" record and exit code 3. Usage problems throw DomainError.
CommandResult run_command(const RunConfig& config);

/// Full command-line entry point: parses argv (flags and TUSNADY_VERIFY_*
/// environment overrides), runs, writes the output, prints notes to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tusnady
