#include "mpq/runtime.hpp"

#include <cassert>
#include <exception>

namespace mpq {

namespace {

std::string type_name(JobType type) { return "job type " + std::to_string(type); }

void require_job_type(JobType type, const char* op) {
  if (type == 0)
    throw Error(Errc::application, std::string(op) + ": job type 0 is reserved");
}

// A worker that cannot continue tells the boss why with a Stop frame whose
// job_type names the failing job and whose payload is {code, message}.
Payload encode_abort(Errc code, const std::string& message) {
  Value::Record rec;
  rec.emplace("code", Value(static_cast<std::uint64_t>(code)));
  rec.emplace("message", Value(message));
  return encode(Value(std::move(rec)));
}

void send_abort(Endpoint& endpoint, JobType type, Errc code, const std::string& message) noexcept {
  try {
    endpoint.send(kBossId, Frame{MessageKind::stop, type, encode_abort(code, message)});
  } catch (...) {
    // The boss may already be gone.
  }
}

Payload invoke(const WorkerRegistry& registry, Endpoint& endpoint, const Job& job,
               WorkerContext& ctx) {
  const auto* handler = registry.find(job.type);
  if (!handler) {
    const auto msg = "worker " + std::to_string(endpoint.self()) + " has no handler for " +
                     type_name(job.type);
    send_abort(endpoint, job.type, Errc::configuration, msg);
    throw Error(Errc::configuration, msg);
  }
  auto fail = [&](Errc code, const char* what) -> Error {
    const auto msg = "handler for " + type_name(job.type) + " failed on worker " +
                     std::to_string(endpoint.self()) + ": " + what;
    send_abort(endpoint, job.type, code, msg);
    return Error(code, msg);
  };
  try {
    return (*handler)(job, ctx);
  } catch (const Error& e) {
    // A vanished boss leaves nobody to report to.
    if (e.code() == Errc::transport) throw;
    throw fail(e.code(), e.what());
  } catch (const std::exception& e) {
    throw fail(Errc::application, e.what());
  }
}

}  // namespace

Payload encode_queue_info(const QueueInfo& info) {
  Value::Record rec;
  rec.emplace("idle_workers", Value(info.idle_workers));
  rec.emplace("queued_jobs", Value(info.queued_jobs));
  rec.emplace("total_workers", Value(info.total_workers));
  return encode(Value(std::move(rec)));
}

QueueInfo decode_queue_info(ByteView bytes) {
  const auto v = decode(bytes);
  return QueueInfo{v.at("queued_jobs").as_unsigned(), v.at("idle_workers").as_unsigned(),
                   v.at("total_workers").as_unsigned()};
}

// --- worker side -----------------------------------------------------------

void WorkerContext::require_supervised(const char* op) const {
  if (!supervised_)
    throw Error(Errc::lifecycle, std::string(op) + " is only valid while the boss supervises jobs");
}

NodeId WorkerContext::node() const noexcept { return endpoint_.self(); }

void WorkerContext::submit(Job job) {
  require_supervised("submit");
  require_job_type(job.type, "submit");
  endpoint_.send(kBossId, Frame{MessageKind::job_submit, job.type, std::move(job.data)});
}

Payload WorkerContext::task(Job job) {
  require_supervised("task");
  require_job_type(job.type, "task");
  endpoint_.send(kBossId, Frame{MessageKind::task_request, job.type, std::move(job.data)});
  auto env = endpoint_.recv();
  if (env.frame.kind == MessageKind::task_response) return std::move(env.frame.payload);
  if (env.frame.kind == MessageKind::stop)
    throw Error(Errc::lifecycle, "stopped while waiting for a task response");
  throw Error(Errc::protocol,
              "expected TaskResponse, got " + std::string(to_string(env.frame.kind)));
}

QueueInfo WorkerContext::info() {
  require_supervised("info");
  endpoint_.send(kBossId, Frame{MessageKind::info_request, 0, {}});
  auto env = endpoint_.recv();
  if (env.frame.kind == MessageKind::info_response) return decode_queue_info(env.frame.payload);
  if (env.frame.kind == MessageKind::stop)
    throw Error(Errc::lifecycle, "stopped while waiting for queue info");
  throw Error(Errc::protocol,
              "expected InfoResponse, got " + std::string(to_string(env.frame.kind)));
}

void WorkerRegistry::on_job(JobType type, Handler handler) {
  require_job_type(type, "on_job");
  handlers_[type] = std::move(handler);
}

const WorkerRegistry::Handler* WorkerRegistry::find(JobType type) const {
  auto it = handlers_.find(type);
  return it == handlers_.end() ? nullptr : &it->second;
}

void run_worker(Endpoint& endpoint, const WorkerRegistry& registry) {
  for (;;) {
    auto env = endpoint.recv();
    auto& frame = env.frame;
    switch (frame.kind) {
      case MessageKind::data_share: {
        WorkerContext ctx(endpoint, false);
        invoke(registry, endpoint, Job{frame.job_type, std::move(frame.payload)}, ctx);
        endpoint.send(kBossId, Frame{MessageKind::job_result, frame.job_type, {}});
        break;
      }
      case MessageKind::job_assign: {
        WorkerContext ctx(endpoint, true);
        auto result = invoke(registry, endpoint, Job{frame.job_type, std::move(frame.payload)}, ctx);
        endpoint.send(kBossId, Frame{MessageKind::job_result, frame.job_type, std::move(result)});
        break;
      }
      case MessageKind::stop:
        return;
      default: {
        const auto msg = "worker " + std::to_string(endpoint.self()) + " got unexpected " +
                         std::string(to_string(frame.kind));
        send_abort(endpoint, frame.job_type, Errc::protocol, msg);
        throw Error(Errc::protocol, msg);
      }
    }
  }
}

// --- boss side -------------------------------------------------------------

Boss::~Boss() { shutdown(); }

void Boss::shutdown() noexcept {
  if (!endpoint_) return;
  if (phase_ != Phase::stopped) {
    for (NodeId w = 1; w <= endpoint_->worker_count(); ++w) {
      try {
        endpoint_->send(w, Frame{MessageKind::stop, 0, {}});
      } catch (...) {
        // Already disconnected.
      }
    }
    phase_ = Phase::stopped;
  }
  endpoint_->close();
  threads_.clear();
}

void Boss::on_task(JobType type, TaskHandler handler) {
  require_job_type(type, "on_task");
  tasks_[type] = std::move(handler);
}

void Boss::remove_task(JobType type) { tasks_.erase(type); }

void Boss::require_idle(const char* op) const {
  switch (phase_) {
    case Phase::idle: return;
    case Phase::supervising:
      throw Error(Errc::lifecycle, std::string(op) + ": supervision already in progress");
    case Phase::failed:
      throw Error(Errc::lifecycle, std::string(op) + ": an earlier run aborted");
    case Phase::stopped:
      throw Error(Errc::lifecycle, std::string(op) + ": cluster already stopped");
  }
}

void Boss::observe(const BossState& state) const {
  assert(state.outstanding + state.idle.size() == endpoint_->worker_count());
  if (observer_) observer_(state);
}

void Boss::worker_aborted(const Envelope& env) const {
  auto code = Errc::application;
  std::string message = "worker " + std::to_string(env.source) + " aborted";
  try {
    const auto v = decode(env.frame.payload);
    const auto raw = v.at("code").as_unsigned();
    if (raw <= static_cast<std::uint64_t>(Errc::usage)) code = static_cast<Errc>(raw);
    message = v.at("message").as_bytes();
  } catch (const Error&) {
    // Keep the generic diagnostic.
  }
  throw Error(code, message);
}

void Boss::handle(BossState& state, Envelope env) {
  auto& frame = env.frame;
  switch (frame.kind) {
    case MessageKind::job_submit:
      require_job_type(frame.job_type, "submitted job");
      state.inqueue.push_back(Job{frame.job_type, std::move(frame.payload)});
      load_.record(state.outstanding, state.inqueue.size());
      return;
    case MessageKind::job_result:
      if (state.idle.contains(env.source))
        throw Error(Errc::protocol,
                    "result from worker " + std::to_string(env.source) + " with no job assigned");
      state.idle.insert(env.source);
      --state.outstanding;
      if (!frame.payload.empty())
        state.outqueue.push_back(Job{frame.job_type, std::move(frame.payload)});
      load_.record(state.outstanding, state.inqueue.size());
      return;
    case MessageKind::task_request: {
      auto it = tasks_.find(frame.job_type);
      if (it == tasks_.end())
        throw Error(Errc::configuration, "no boss task handler for " + type_name(frame.job_type));
      const TaskContext ctx{env.source,
                            QueueInfo{state.inqueue.size(), state.idle.size(),
                                      endpoint_->worker_count()}};
      Payload reply;
      try {
        reply = it->second(Job{frame.job_type, std::move(frame.payload)}, ctx);
      } catch (const std::exception& e) {
        throw Error(Errc::application,
                    "boss task handler for " + type_name(frame.job_type) + " failed: " + e.what());
      }
      endpoint_->send(env.source, Frame{MessageKind::task_response, frame.job_type, std::move(reply)});
      return;
    }
    case MessageKind::info_request:
      endpoint_->send(env.source,
                      Frame{MessageKind::info_response, 0,
                            encode_queue_info(QueueInfo{state.inqueue.size(), state.idle.size(),
                                                        endpoint_->worker_count()})});
      return;
    case MessageKind::stop:
      worker_aborted(env);
    default:
      throw Error(Errc::protocol, "boss got unexpected " + std::string(to_string(frame.kind)) +
                                      " from worker " + std::to_string(env.source));
  }
}

JobQueue Boss::run_jobs(JobQueue inqueue) {
  require_idle("run_jobs");
  for (const auto& job : inqueue) require_job_type(job.type, "run_jobs");
  load_ = LoadRecorder{};
  load_.start();
  if (inqueue.empty()) {
    load_.record(0, 0);
    return {};
  }
  const auto workers = endpoint_->worker_count();
  if (workers == 0) throw Error(Errc::configuration, "run_jobs: the cluster has no workers");

  BossState state;
  state.inqueue = std::move(inqueue);
  for (NodeId w = 1; w <= workers; ++w) state.idle.insert(w);
  load_.record(0, state.inqueue.size());

  phase_ = Phase::supervising;
  try {
    while (!state.inqueue.empty() || state.outstanding > 0) {
      observe(state);
      if (!state.inqueue.empty() && !state.idle.empty()) {
        const NodeId worker = *state.idle.begin();
        auto& job = state.inqueue.front();
        endpoint_->send(worker, Frame{MessageKind::job_assign, job.type, std::move(job.data)});
        state.idle.erase(state.idle.begin());
        state.inqueue.pop_front();
        ++state.outstanding;
        load_.record(state.outstanding, state.inqueue.size());
      } else {
        handle(state, endpoint_->recv());
      }
    }
    observe(state);
  } catch (...) {
    phase_ = Phase::failed;
    throw;
  }
  phase_ = Phase::idle;
  return std::move(state.outqueue);
}

void Boss::share_data(JobType type, Payload data) {
  require_idle("share_data");
  require_job_type(type, "share_data");
  const auto workers = endpoint_->worker_count();
  if (workers == 0) return;

  phase_ = Phase::supervising;
  try {
    endpoint_->broadcast(Frame{MessageKind::data_share, type, std::move(data)});
    std::set<NodeId> acked;
    while (acked.size() < workers) {
      auto env = endpoint_->recv();
      if (env.frame.kind == MessageKind::stop) worker_aborted(env);
      if (env.frame.kind != MessageKind::job_result || !env.frame.payload.empty() ||
          env.frame.job_type != type || !acked.insert(env.source).second)
        throw Error(Errc::protocol, "unexpected " + std::string(to_string(env.frame.kind)) +
                                        " from worker " + std::to_string(env.source) +
                                        " during data share");
    }
  } catch (...) {
    phase_ = Phase::failed;
    throw;
  }
  phase_ = Phase::idle;
}

void Boss::stop() {
  if (phase_ == Phase::stopped) throw Error(Errc::lifecycle, "stop: cluster already stopped");
  if (phase_ == Phase::supervising)
    throw Error(Errc::lifecycle, "stop: supervision in progress");
  if (phase_ == Phase::failed) {
    shutdown();
    return;
  }
  endpoint_->broadcast(Frame{MessageKind::stop, 0, {}});
  phase_ = Phase::stopped;
  shutdown();
}

// --- startup ---------------------------------------------------------------

std::optional<Boss> start(const ClusterConfig& config, WorkerSetup setup) {
  auto wrap = [&](std::unique_ptr<Endpoint> ep) -> std::unique_ptr<Endpoint> {
    if (config.trace) return std::make_unique<TracingEndpoint>(std::move(ep), config.trace);
    return ep;
  };

  if (const auto* opts = std::get_if<InprocOptions>(&config.transport)) {
    auto endpoints = make_inproc_cluster(*opts);
    std::vector<std::jthread> threads;
    threads.reserve(opts->workers);
    for (NodeId w = 1; w <= opts->workers; ++w) {
      threads.emplace_back([ep = std::move(endpoints[w]), setup, w]() mutable {
        WorkerRegistry registry;
        try {
          if (setup) setup(registry, w);
        } catch (const std::exception& e) {
          send_abort(*ep, 0, Errc::application,
                     "setup failed on worker " + std::to_string(w) + ": " + e.what());
          ep->close();
          return;
        }
        try {
          run_worker(*ep, registry);
        } catch (const std::exception&) {
          // Failures were reported to the boss by run_worker, or the boss is
          // gone.
        }
        ep->close();
      });
    }
    return Boss(wrap(std::move(endpoints[kBossId])), std::move(threads));
  }

  if (const auto* opts = std::get_if<TcpBossOptions>(&config.transport))
    return Boss(wrap(tcp_boss_endpoint(*opts)), {});

  const auto& opts = std::get<TcpWorkerOptions>(config.transport);
  auto ep = tcp_worker_endpoint(opts);
  WorkerRegistry registry;
  if (setup) setup(registry, ep->self());
  run_worker(*ep, registry);
  ep->close();
  return std::nullopt;
}

}  // namespace mpq
