#pragma once

// Boss/worker job-queue runtime.
//
// start() turns node 0 into the boss and every other node into a worker that
// waits for data shares, jobs or a stop command. The boss fills a job queue
// and calls run_jobs(), which assigns queued jobs to idle workers until the
// queue is empty and every assigned job has reported back. While a job runs,
// its handler may submit() more jobs into the live queue, ask the boss to run
// a task() on its behalf, or query info() about the queue.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mpq/codec.hpp"
#include "mpq/inproc.hpp"
#include "mpq/load.hpp"
#include "mpq/tcp.hpp"
#include "mpq/wire.hpp"

namespace mpq {

/// A typed unit of work. Type 0 is reserved.
struct Job {
  JobType type = 0;
  Payload data;

  friend bool operator==(const Job&, const Job&) = default;
};

using JobQueue = std::deque<Job>;

struct QueueInfo {
  std::uint64_t queued_jobs = 0;
  std::uint64_t idle_workers = 0;
  std::uint64_t total_workers = 0;

  friend bool operator==(const QueueInfo&, const QueueInfo&) = default;
};

Payload encode_queue_info(const QueueInfo& info);
QueueInfo decode_queue_info(ByteView bytes);

/// Handle passed to a running job handler. Only valid for the duration of
/// that invocation; inside a data-share handler every call is a lifecycle
/// error because the boss is not supervising.
class WorkerContext {
 public:
  WorkerContext(const WorkerContext&) = delete;
  WorkerContext& operator=(const WorkerContext&) = delete;

  /// Appends `job` to the boss's live queue. Does not wait.
  void submit(Job job);

  /// Runs `job` on the boss immediately and returns its result.
  Payload task(Job job);

  /// Snapshot of the boss queue; may be stale by the time it is used.
  QueueInfo info();

  NodeId node() const noexcept;

 private:
  friend void run_worker(Endpoint&, const class WorkerRegistry&);
  WorkerContext(Endpoint& endpoint, bool supervised) : endpoint_(endpoint), supervised_(supervised) {}
  void require_supervised(const char* op) const;

  Endpoint& endpoint_;
  bool supervised_;
};

class WorkerRegistry {
 public:
  using Handler = std::function<Payload(const Job&, WorkerContext&)>;

  void on_job(JobType type, Handler handler);
  const Handler* find(JobType type) const;

 private:
  std::unordered_map<JobType, Handler> handlers_;
};

/// Called once per worker, inside that worker's context, before it accepts
/// work. Worker-local state belongs in the handlers' captures.
using WorkerSetup = std::function<void(WorkerRegistry&, NodeId)>;

/// What a boss-side task handler learns about the request.
struct TaskContext {
  NodeId source = kBossId;
  QueueInfo queue;
};

using TaskHandler = std::function<Payload(const Job&, const TaskContext&)>;

/// Supervision bookkeeping for one run_jobs() call.
struct BossState {
  JobQueue inqueue;
  JobQueue outqueue;
  std::set<NodeId> idle;
  std::size_t outstanding = 0;
};

struct ClusterConfig {
  std::variant<InprocOptions, TcpBossOptions, TcpWorkerOptions> transport = InprocOptions{};
  /// Boss-side frame log, for tests and diagnostics.
  std::shared_ptr<FrameTrace> trace;
};

class Boss {
 public:
  Boss(Boss&&) = default;
  Boss& operator=(Boss&&) = delete;
  ~Boss();

  std::size_t worker_count() const noexcept { return endpoint_->worker_count(); }

  /// Registers (or replaces) the boss-side handler for task `type`.
  void on_task(JobType type, TaskHandler handler);
  void remove_task(JobType type);

  /// Supervises workers until `inqueue` and every job submitted along the way
  /// has run. Returns the non-empty results in arrival order.
  JobQueue run_jobs(JobQueue inqueue);

  /// Delivers `data` to every worker's handler for `type` and waits until all
  /// of them have processed it.
  void share_data(JobType type, Payload data);

  /// Tells every worker to quit and closes the endpoint. Calling it twice is a
  /// lifecycle error.
  void stop();

  /// Samples from the most recent run_jobs() call.
  const std::vector<LoadSample>& samples() const noexcept { return load_.samples(); }

  /// Called at every message-handling boundary of run_jobs().
  void set_observer(std::function<void(const BossState&)> observer) {
    observer_ = std::move(observer);
  }

 private:
  friend std::optional<Boss> start(const ClusterConfig&, WorkerSetup);

  enum class Phase { idle, supervising, failed, stopped };

  Boss(std::unique_ptr<Endpoint> endpoint, std::vector<std::jthread> threads)
      : endpoint_(std::move(endpoint)), threads_(std::move(threads)) {}

  void require_idle(const char* op) const;
  void shutdown() noexcept;
  void observe(const BossState& state) const;
  [[noreturn]] void worker_aborted(const Envelope& env) const;
  void handle(BossState& state, Envelope env);

  std::unique_ptr<Endpoint> endpoint_;
  std::vector<std::jthread> threads_;
  std::map<JobType, TaskHandler> tasks_;
  LoadRecorder load_;
  std::function<void(const BossState&)> observer_;
  Phase phase_ = Phase::idle;
};

/// Brings up the cluster. For in-process and TCP-boss configurations returns
/// the boss; for a TCP-worker configuration runs the worker loop until the
/// boss stops it and returns nullopt.
std::optional<Boss> start(const ClusterConfig& config, WorkerSetup setup);

/// The worker main loop: handles data shares and jobs until Stop. A handler
/// failure is reported to the boss and rethrown.
void run_worker(Endpoint& endpoint, const WorkerRegistry& registry);

}  // namespace mpq
