#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "mpq/wire.hpp"

namespace mpq {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "host:port"; throws Errc::usage on malformed input.
HostPort parse_host_port(std::string_view text);

struct TcpBossOptions {
  std::string listen = "127.0.0.1:0";
  std::size_t workers = 1;
  std::chrono::milliseconds accept_timeout{10000};
  /// Called with the bound port once the listener is up, before accepting.
  std::function<void(std::uint16_t)> on_listening;
};

struct TcpWorkerOptions {
  std::string connect;
  std::chrono::milliseconds connect_timeout{10000};
};

/// Listens, accepts exactly `workers` connections and assigns node ids in
/// connection order. Each worker receives one InfoResponse handshake frame
/// whose job_type is its node id and whose payload encodes the worker count.
/// Throws Errc::startup if the workers do not all arrive in time.
std::unique_ptr<Endpoint> tcp_boss_endpoint(const TcpBossOptions& options);

/// Connects to the boss (retrying until the timeout) and reads the handshake.
std::unique_ptr<Endpoint> tcp_worker_endpoint(const TcpWorkerOptions& options);

}  // namespace mpq
