#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mpq/error.hpp"

namespace mpq::cli {

enum class Command { factor, matsquare, queens, bench_overhead, scaling };
enum class Transport { inproc, tcp };
enum class Role { boss, worker };

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  Command command = Command::factor;
  Transport transport = Transport::inproc;
  Role role = Role::boss;
  std::size_t workers = 4;
  std::string listen;
  std::string connect;
  std::chrono::milliseconds timeout{10000};
  std::optional<std::string> load_csv;

  // factor
  std::uint64_t n = 0;
  // queens, scaling
  std::uint32_t size = 8;
  std::size_t overflow = 8;
  // matsquare
  std::size_t dim = 4;
  std::uint64_t seed = 1;
  bool integer_entries = false;
  // bench-overhead
  std::vector<std::size_t> jobs{100, 400, 1600};
  std::size_t payload = 0;
  double sleep_ms = 10.0;
  // scaling
  std::vector<std::size_t> worker_counts{1, 2, 4, 8};
};

/// Thrown by parse_args for --help; carries the text to print.
struct HelpRequested {
  std::string text;
};

/// Throws Error(Errc::usage) on bad arguments and HelpRequested on --help.
RunConfig parse_args(int argc, const char* const* argv);

/// Runs a parsed configuration, writing result lines to `out` and
/// diagnostics to `err`. Returns the process exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run with the exit-code contract: 0 ok, 2 usage, 1 failure.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mpq::cli
