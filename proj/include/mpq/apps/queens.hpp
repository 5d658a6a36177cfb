#pragma once

// Counts placements of n non-attacking queens with a backtracking search
// spread over the cluster. Each PLACE job explores from one partial
// placement using a local stack; whenever the stack reaches the overflow
// threshold the oldest (shallowest) entries are handed back to the boss as
// new PLACE jobs. A finished job reports its local count through a COUNT
// task, which the boss adds to its total.

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mpq/runtime.hpp"

namespace mpq::apps {

enum QueensJob : JobType {
  kQueensPlace = 1,
  kQueensCount = 2,
};

/// Entry i is the row of the queen in column i.
using Placement = std::vector<std::uint32_t>;

/// True iff the last queen shares no row or diagonal with an earlier one.
bool fits(std::span<const std::uint32_t> row) noexcept;

struct QueensParams {
  std::uint32_t size = 8;
  std::size_t overflow = 8;
};

/// Optional instrumentation shared by all workers of a run.
struct QueensProbe {
  std::atomic<std::size_t> max_stack_at_loop_top{0};
  std::atomic<std::uint64_t> spills{0};
  std::atomic<std::uint64_t> jobs{0};
};

/// Runs one PLACE job; returns the number of full placements found locally.
std::uint64_t explore(const Placement& seed, const QueensParams& params, WorkerContext* ctx,
                      QueensProbe* probe = nullptr);

/// Throws Errc::application unless size >= 1 and overflow >= 2.
void validate(const QueensParams& params);

void register_queens_workers(WorkerRegistry& registry, QueensParams params,
                             std::shared_ptr<QueensProbe> probe = nullptr);

/// Boss side: queues PLACE(empty), supervises, returns the COUNT total.
std::uint64_t solve_queens(Boss& boss);

/// Brings up an in-process cluster, solves, and stops it.
std::uint64_t queens_count(std::uint32_t size, std::size_t overflow, std::size_t workers);

}  // namespace mpq::apps
