#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mpq/wire.hpp"

namespace mpq {

struct InprocOptions {
  std::size_t workers = 1;
  /// When set, every receive picks uniformly among the peers with pending
  /// frames (seeded), and senders occasionally yield, so tests explore
  /// different channel interleavings. Per-channel order is always kept.
  std::optional<std::uint64_t> shuffle_seed;
};

/// Builds `workers + 1` endpoints linked by unbounded in-memory queues.
/// Element i is node i; element 0 is the boss.
std::vector<std::unique_ptr<Endpoint>> make_inproc_cluster(const InprocOptions& options);

}  // namespace mpq
