#include "mpq/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <thread>

#include "mpq/runtime.hpp"

namespace mpq {

namespace {

using Clock = std::chrono::steady_clock;

std::string format_row(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

OverheadReport make_overhead_report(std::size_t jobs, std::size_t payload_doubles,
                                    std::chrono::duration<double> sleep, std::size_t workers,
                                    double runtime_sec) {
  OverheadReport r;
  r.jobs = jobs;
  r.payload_doubles = payload_doubles;
  r.workers = workers;
  r.sleep_sec = sleep.count();
  r.runtime_sec = runtime_sec;
  r.ideal_sec = static_cast<double>(jobs) * r.sleep_sec / static_cast<double>(workers);
  r.overhead_sec = runtime_sec - r.ideal_sec;
  r.per_job_overhead_sec = r.overhead_sec / static_cast<double>(jobs);
  return r;
}

OverheadReport bench_overhead(std::size_t jobs, std::size_t payload_doubles,
                              std::chrono::microseconds sleep, std::size_t workers) {
  if (jobs == 0) throw Error(Errc::usage, "bench_overhead: at least one job is required");
  if (workers == 0) throw Error(Errc::usage, "bench_overhead: at least one worker is required");

  auto boss = start(ClusterConfig{InprocOptions{workers, std::nullopt}, nullptr},
                    [sleep](WorkerRegistry& reg, NodeId) {
                      reg.on_job(kSleepJob, [sleep](const Job& job, WorkerContext&) -> Payload {
                        std::this_thread::sleep_for(sleep);
                        if (job.data.empty()) return {};
                        return pack(unpack<std::vector<double>>(job.data));
                      });
                    });

  std::vector<double> data(payload_doubles);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.5 * static_cast<double>(i);

  const auto t0 = Clock::now();
  JobQueue queue;
  for (std::size_t i = 0; i < jobs; ++i)
    queue.push_back(Job{kSleepJob, payload_doubles ? pack(data) : Payload{}});
  auto results = boss->run_jobs(std::move(queue));
  for (const auto& r : results) {
    if (unpack<std::vector<double>>(r.data).size() != payload_doubles)
      throw Error(Errc::application, "bench_overhead: echoed payload changed size");
  }
  const std::chrono::duration<double> elapsed = Clock::now() - t0;
  boss->stop();

  if (payload_doubles && results.size() != jobs)
    throw Error(Errc::application, "bench_overhead: missing echoed results");
  return make_overhead_report(jobs, payload_doubles, sleep, workers, elapsed.count());
}

std::vector<ScalingReport> derive_scaling(std::span<const ScalingMeasurement> measurements) {
  const auto base = std::find_if(measurements.begin(), measurements.end(),
                                 [](const auto& m) { return m.workers == 1; });
  if (base == measurements.end())
    throw Error(Errc::usage, "scaling: a single-worker baseline run is required");
  const double t1 = base->runtime_sec;

  std::vector<ScalingReport> rows;
  rows.reserve(measurements.size());
  for (const auto& m : measurements) {
    ScalingReport r;
    r.workers = m.workers;
    r.nodes = m.workers + 1;
    r.runtime_sec = m.runtime_sec;
    r.worker_usage_sec = static_cast<double>(m.workers) * m.runtime_sec;
    r.total_usage_sec = static_cast<double>(r.nodes) * m.runtime_sec;
    r.speedup = t1 / m.runtime_sec;
    r.efficiency = r.speedup / static_cast<double>(r.nodes);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ScalingReport> scaling_report(const Workload& workload,
                                          std::span<const std::size_t> worker_counts) {
  std::vector<ScalingMeasurement> measurements;
  for (const auto workers : worker_counts) {
    const auto t0 = Clock::now();
    workload(workers);
    const std::chrono::duration<double> elapsed = Clock::now() - t0;
    measurements.push_back({workers, elapsed.count()});
  }
  return derive_scaling(measurements);
}

void print_scaling_table(std::span<const ScalingReport> rows, std::ostream& os) {
  os << format_row("%7s %8s %12s %14s %14s %8s %10s\n", "nodes", "workers", "T(p) [s]",
                   "worker usage", "total usage", "speedup", "efficiency");
  for (const auto& r : rows)
    os << format_row("%7zu %8zu %12.4f %14.4f %14.4f %8.3f %10.3f\n", r.nodes, r.workers,
                     r.runtime_sec, r.worker_usage_sec, r.total_usage_sec, r.speedup,
                     r.efficiency);
}

void print_overhead_table(std::span<const OverheadReport> rows, std::ostream& os) {
  os << format_row("%8s %8s %8s %10s %12s %12s %12s %16s\n", "jobs", "doubles", "workers",
                   "sleep [s]", "T(p) [s]", "ideal [s]", "overhead [s]", "per job [us]");
  for (const auto& r : rows)
    os << format_row("%8zu %8zu %8zu %10.4f %12.4f %12.4f %12.4f %16.2f\n", r.jobs,
                     r.payload_doubles, r.workers, r.sleep_sec, r.runtime_sec, r.ideal_sec,
                     r.overhead_sec, r.per_job_overhead_sec * 1e6);
}

}  // namespace mpq
