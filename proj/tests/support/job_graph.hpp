#pragma once

// A deterministic self-submitting job graph for protocol tests. Job `id` at
// `depth` spawns fanout(id) children with ids 4*id+1.. while depth < max;
// leaves return their id, inner jobs return nothing.

#include <atomic>
#include <map>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "mpq/runtime.hpp"

namespace mpq::test {

inline constexpr JobType kGraphJob = 7;

inline std::uint64_t graph_fanout(std::uint64_t id, std::uint64_t salt) {
  auto h = (id + 1) * 0x9e3779b97f4a7c15ULL ^ salt;
  h ^= h >> 29;
  return (id == 0) ? 3 : h % 4;
}

inline Payload graph_job(std::uint64_t id, std::uint64_t depth) {
  Value::Record rec;
  rec.emplace("depth", Value(depth));
  rec.emplace("id", Value(id));
  return encode(Value(std::move(rec)));
}

struct GraphExpectation {
  std::vector<std::uint64_t> all_ids;
  std::vector<std::uint64_t> leaf_ids;
};

inline void enumerate_graph(std::uint64_t id, std::uint64_t depth, std::uint64_t max_depth,
                            std::uint64_t salt, GraphExpectation& out) {
  out.all_ids.push_back(id);
  const auto fan = depth < max_depth ? graph_fanout(id, salt) : 0;
  if (fan == 0) out.leaf_ids.push_back(id);
  for (std::uint64_t k = 0; k < fan; ++k) enumerate_graph(4 * id + k + 1, depth + 1, max_depth, salt, out);
}

/// Thread-safe per-job invocation counter.
struct InvocationLog {
  std::mutex mutex;
  std::map<std::uint64_t, int> count;

  void hit(std::uint64_t id) {
    std::lock_guard lock(mutex);
    ++count[id];
  }
};

inline void register_graph_worker(WorkerRegistry& reg, std::uint64_t max_depth, std::uint64_t salt,
                                  std::shared_ptr<InvocationLog> log, std::uint64_t jitter_seed) {
  auto rng = std::make_shared<std::mt19937_64>(jitter_seed);
  reg.on_job(kGraphJob, [=](const Job& job, WorkerContext& ctx) -> Payload {
    const auto v = decode(job.data);
    const auto id = v.at("id").as_unsigned();
    const auto depth = v.at("depth").as_unsigned();
    log->hit(id);
    const auto fan = depth < max_depth ? graph_fanout(id, salt) : 0;
    for (std::uint64_t k = 0; k < fan; ++k) {
      if ((*rng)() % 3 == 0) std::this_thread::yield();
      ctx.submit(Job{kGraphJob, graph_job(4 * id + k + 1, depth + 1)});
    }
    if (fan == 0) return pack(id);
    return {};
  });
}

}  // namespace mpq::test
