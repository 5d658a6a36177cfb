#include "mpq/apps/queens.hpp"

#include <deque>

namespace mpq::apps {

bool fits(std::span<const std::uint32_t> row) noexcept {
  if (row.empty()) return true;
  const auto last = row.size() - 1;
  const auto r = static_cast<std::int64_t>(row[last]);
  for (std::size_t i = 0; i < last; ++i) {
    const auto d = r - static_cast<std::int64_t>(row[i]);
    if (d == 0 || d == static_cast<std::int64_t>(last - i) || -d == static_cast<std::int64_t>(last - i))
      return false;
  }
  return true;
}

void validate(const QueensParams& params) {
  if (params.size < 1) throw Error(Errc::application, "queens: board size must be at least 1");
  if (params.overflow < 2) throw Error(Errc::application, "queens: overflow must be at least 2");
}

std::uint64_t explore(const Placement& seed, const QueensParams& params, WorkerContext* ctx,
                      QueensProbe* probe) {
  std::deque<Placement> stack{seed};
  std::uint64_t solutions = 0;
  while (!stack.empty()) {
    if (ctx) {
      while (stack.size() >= params.overflow) {
        ctx->submit(Job{kQueensPlace, pack(stack.front())});
        stack.pop_front();
        if (probe) probe->spills.fetch_add(1, std::memory_order_relaxed);
      }
    }
    if (probe) {
      auto seen = probe->max_stack_at_loop_top.load(std::memory_order_relaxed);
      while (stack.size() > seen &&
             !probe->max_stack_at_loop_top.compare_exchange_weak(seen, stack.size())) {
      }
    }

    Placement row = std::move(stack.back());
    stack.pop_back();
    if (row.size() >= params.size) {
      ++solutions;  // only reachable from a full seed
      continue;
    }
    row.push_back(0);
    for (std::uint32_t i = 0; i < params.size; ++i) {
      row.back() = i;
      if (!fits(row)) continue;
      if (row.size() == params.size)
        ++solutions;
      else
        stack.push_back(row);
    }
  }
  return solutions;
}

void register_queens_workers(WorkerRegistry& registry, QueensParams params,
                             std::shared_ptr<QueensProbe> probe) {
  validate(params);
  registry.on_job(kQueensPlace, [params, probe](const Job& job, WorkerContext& ctx) -> Payload {
    const auto seed = unpack<Placement>(job.data);
    if (seed.size() > params.size || (!seed.empty() && !fits(seed)))
      throw Error(Errc::application, "PLACE job carries an invalid placement");
    if (probe) probe->jobs.fetch_add(1, std::memory_order_relaxed);
    const auto found = explore(seed, params, &ctx, probe.get());
    ctx.task(Job{kQueensCount, pack(found)});
    return {};
  });
}

std::uint64_t solve_queens(Boss& boss) {
  std::uint64_t total = 0;
  boss.on_task(kQueensCount, [&total](const Job& job, const TaskContext&) -> Payload {
    total += unpack<std::uint64_t>(job.data);
    return {};
  });
  JobQueue inqueue;
  inqueue.push_back(Job{kQueensPlace, pack(Placement{})});
  try {
    boss.run_jobs(std::move(inqueue));
  } catch (...) {
    boss.remove_task(kQueensCount);
    throw;
  }
  boss.remove_task(kQueensCount);
  return total;
}

std::uint64_t queens_count(std::uint32_t size, std::size_t overflow, std::size_t workers) {
  const QueensParams params{size, overflow};
  validate(params);
  auto boss = start(ClusterConfig{InprocOptions{workers, std::nullopt}, nullptr},
                    [params](WorkerRegistry& reg, NodeId) { register_queens_workers(reg, params); });
  const auto total = solve_queens(*boss);
  boss->stop();
  return total;
}

}  // namespace mpq::apps
