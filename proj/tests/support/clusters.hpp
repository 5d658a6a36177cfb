#pragma once

#include <algorithm>
#include <chrono>
#include <future>
#include <memory>
#include <thread>
#include <vector>

#include "mpq/inproc.hpp"
#include "mpq/tcp.hpp"

namespace mpq::test {

/// Boss endpoint at index 0, worker k at index k, over localhost TCP.
inline std::vector<std::unique_ptr<Endpoint>> make_tcp_cluster(std::size_t workers) {
  std::promise<std::uint16_t> port_promise;
  auto port_future = port_promise.get_future();
  std::vector<std::unique_ptr<Endpoint>> connected(workers);
  std::thread connector([&] {
    const auto port = port_future.get();
    std::vector<std::thread> dialers;
    for (std::size_t i = 0; i < workers; ++i)
      dialers.emplace_back([&, i] {
        connected[i] = tcp_worker_endpoint(
            {"127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(5000)});
      });
    for (auto& t : dialers) t.join();
  });
  auto boss = tcp_boss_endpoint({"127.0.0.1:0", workers, std::chrono::milliseconds(5000),
                                 [&](std::uint16_t port) { port_promise.set_value(port); }});
  connector.join();
  std::vector<std::unique_ptr<Endpoint>> nodes(workers + 1);
  nodes[0] = std::move(boss);
  for (auto& ep : connected) {
    const auto id = ep->self();
    nodes[id] = std::move(ep);
  }
  return nodes;
}

}  // namespace mpq::test
