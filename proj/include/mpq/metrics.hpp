#pragma once

// Overhead and scaling measurements over in-process clusters.
//
// Node counts follow the usual cluster convention: p = workers + 1 (the boss
// counts as a node). Speedup and efficiency are taken against the
// single-worker run, so speedup(1 worker) = 1 and efficiency = speedup / p.

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mpq/load.hpp"
#include "mpq/wire.hpp"

namespace mpq {

inline constexpr JobType kSleepJob = 1;

struct OverheadReport {
  std::size_t jobs = 0;
  std::size_t payload_doubles = 0;
  std::size_t workers = 0;
  double sleep_sec = 0.0;
  double runtime_sec = 0.0;
  double ideal_sec = 0.0;     ///< jobs * sleep / workers
  double overhead_sec = 0.0;  ///< runtime - ideal
  double per_job_overhead_sec = 0.0;
};

OverheadReport make_overhead_report(std::size_t jobs, std::size_t payload_doubles,
                                    std::chrono::duration<double> sleep, std::size_t workers,
                                    double runtime_sec);

/// Runs `jobs` sleep jobs on an in-process cluster of `workers` workers. With
/// payload_doubles > 0 every job carries that many doubles, which the worker
/// decodes and sends back re-encoded. Only supervision is timed, including
/// encoding the inputs and decoding the echoed results.
OverheadReport bench_overhead(std::size_t jobs, std::size_t payload_doubles,
                              std::chrono::microseconds sleep, std::size_t workers);

struct ScalingReport {
  std::size_t nodes = 0;  ///< p
  std::size_t workers = 0;
  double runtime_sec = 0.0;
  double worker_usage_sec = 0.0;  ///< (p - 1) * T
  double total_usage_sec = 0.0;   ///< p * T
  double speedup = 0.0;
  double efficiency = 0.0;
};

struct ScalingMeasurement {
  std::size_t workers = 0;
  double runtime_sec = 0.0;
};

/// Derives the report rows; one measurement must be for a single worker.
std::vector<ScalingReport> derive_scaling(std::span<const ScalingMeasurement> measurements);

using Workload = std::function<void(std::size_t workers)>;

/// Times `workload` once per worker count (wall clock) and derives the rows.
std::vector<ScalingReport> scaling_report(const Workload& workload,
                                          std::span<const std::size_t> worker_counts);

void print_scaling_table(std::span<const ScalingReport> rows, std::ostream& os);
void print_overhead_table(std::span<const OverheadReport> rows, std::ostream& os);

}  // namespace mpq
