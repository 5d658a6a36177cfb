#include "mpq/inproc.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

namespace mpq {

namespace {

// A queued slot without a frame marks the sender's disconnect.
using Slot = std::optional<Frame>;

class Mailbox {
 public:
  Mailbox(std::size_t nodes, std::optional<std::uint64_t> seed) : channels_(nodes) {
    if (seed) rng_.emplace(*seed);
  }

  void push(NodeId source, NodeId owner, Slot slot) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) {
        if (!slot) return;
        throw Error(Errc::transport, "node " + std::to_string(owner) + " is disconnected");
      }
      channels_[source].push_back(std::move(slot));
      if (!rng_) arrivals_.push_back(source);
      ++pending_;
    }
    ready_.notify_one();
  }

  Envelope pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return pending_ > 0; });
    const NodeId source = pick_source();
    auto slot = std::move(channels_[source].front());
    channels_[source].pop_front();
    --pending_;
    if (!slot)
      throw Error(Errc::transport, "node " + std::to_string(source) + " disconnected");
    return Envelope{source, std::move(*slot)};
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }

 private:
  NodeId pick_source() {
    if (!rng_) {
      const NodeId source = arrivals_.front();
      arrivals_.pop_front();
      return source;
    }
    std::vector<NodeId> ready;
    for (NodeId n = 0; n < channels_.size(); ++n)
      if (!channels_[n].empty()) ready.push_back(n);
    std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
    return ready[pick(*rng_)];
  }

  std::mutex mutex_;
  std::condition_variable ready_;
  std::vector<std::deque<Slot>> channels_;
  std::deque<NodeId> arrivals_;
  std::size_t pending_ = 0;
  bool closed_ = false;
  std::optional<std::mt19937_64> rng_;
};

struct Fabric {
  Fabric(std::size_t nodes, std::optional<std::uint64_t> seed) {
    mailboxes.reserve(nodes);
    for (std::size_t n = 0; n < nodes; ++n)
      mailboxes.push_back(std::make_unique<Mailbox>(
          nodes, seed ? std::optional<std::uint64_t>(*seed * 1000003 + n) : std::nullopt));
  }
  std::vector<std::unique_ptr<Mailbox>> mailboxes;
};

class InprocEndpoint final : public Endpoint {
 public:
  InprocEndpoint(std::shared_ptr<Fabric> fabric, NodeId self, std::optional<std::uint64_t> seed)
      : fabric_(std::move(fabric)), self_(self) {
    if (seed) jitter_.emplace(*seed ^ (0x9e3779b97f4a7c15ULL * (self + 1)));
  }

  ~InprocEndpoint() override { close(); }

  NodeId self() const noexcept override { return self_; }
  std::size_t worker_count() const noexcept override { return fabric_->mailboxes.size() - 1; }

  void send(NodeId dest, const Frame& f) override {
    if (closed_) throw Error(Errc::transport, "endpoint closed");
    if (dest >= fabric_->mailboxes.size() || dest == self_)
      throw Error(Errc::transport, "no such peer " + std::to_string(dest));
    if (self_ != kBossId && dest != kBossId)
      throw Error(Errc::transport, "workers may only send to the boss");
    if (jitter_ && (*jitter_)() % 4 == 0) std::this_thread::yield();
    fabric_->mailboxes[dest]->push(self_, dest, f);
  }

  Envelope recv() override {
    if (closed_) throw Error(Errc::transport, "endpoint closed");
    return fabric_->mailboxes[self_]->pop();
  }

  void close() noexcept override {
    if (closed_) return;
    closed_ = true;
    fabric_->mailboxes[self_]->close();
    auto notify = [&](NodeId peer) { fabric_->mailboxes[peer]->push(self_, peer, std::nullopt); };
    if (self_ == kBossId) {
      for (NodeId w = 1; w < fabric_->mailboxes.size(); ++w) notify(w);
    } else {
      notify(kBossId);
    }
  }

 private:
  std::shared_ptr<Fabric> fabric_;
  NodeId self_;
  bool closed_ = false;
  std::optional<std::mt19937_64> jitter_;
};

}  // namespace

std::vector<std::unique_ptr<Endpoint>> make_inproc_cluster(const InprocOptions& options) {
  const auto nodes = options.workers + 1;
  auto fabric = std::make_shared<Fabric>(nodes, options.shuffle_seed);
  std::vector<std::unique_ptr<Endpoint>> endpoints;
  endpoints.reserve(nodes);
  for (NodeId n = 0; n < nodes; ++n)
    endpoints.push_back(std::make_unique<InprocEndpoint>(fabric, n, options.shuffle_seed));
  return endpoints;
}

}  // namespace mpq
