#include "mpq/tcp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

namespace mpq {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void throw_errno(Errc code, const std::string& what) {
  throw Error(code, what + ": " + std::strerror(errno));
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const noexcept { ::freeaddrinfo(p); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const HostPort& hp, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const auto port = std::to_string(hp.port);
  const int rc = ::getaddrinfo(hp.host.empty() ? nullptr : hp.host.c_str(), port.c_str(), &hints,
                               &result);
  if (rc != 0)
    throw Error(Errc::startup, "cannot resolve '" + hp.host + "': " + ::gai_strerror(rc));
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(result);
}

class FdSink final : public ByteSink {
 public:
  explicit FdSink(int fd) : fd_(fd) {}
  void write(ByteView bytes) override {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const auto n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno(Errc::transport, "send failed");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_;
};

class FdSource final : public ByteSource {
 public:
  explicit FdSource(int fd) : fd_(fd) {}
  std::size_t read_some(std::span<std::uint8_t> buffer) override {
    for (;;) {
      const auto n = ::recv(fd_, buffer.data(), buffer.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      throw_errno(Errc::transport, "recv failed");
    }
  }

 private:
  int fd_;
};

class TcpBossEndpoint final : public Endpoint {
 public:
  explicit TcpBossEndpoint(std::vector<Fd> sockets) {
    conns_.reserve(sockets.size());
    for (auto& s : sockets) conns_.push_back(Connection{std::move(s), {}, 0, false});
  }
  ~TcpBossEndpoint() override { close(); }

  NodeId self() const noexcept override { return kBossId; }
  std::size_t worker_count() const noexcept override { return conns_.size(); }

  void send(NodeId dest, const Frame& f) override {
    if (dest == kBossId || dest > conns_.size())
      throw Error(Errc::transport, "no such worker " + std::to_string(dest));
    auto& c = conns_[dest - 1];
    if (!c.fd) throw Error(Errc::transport, "worker " + std::to_string(dest) + " is disconnected");
    FdSink sink(c.fd.get());
    try {
      write_frame(sink, f);
    } catch (const Error& e) {
      throw Error(Errc::transport, "worker " + std::to_string(dest) + ": " + e.what());
    }
  }

  Envelope recv() override {
    for (;;) {
      // Serve buffered frames round-robin so no worker's channel starves.
      const auto n = conns_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = (next_ + i) % n;
        auto& c = conns_[k];
        if (!c.fd) continue;
        std::size_t consumed = 0;
        auto frame = try_parse_frame(ByteView(c.buffer).subspan(c.start), consumed);
        if (frame) {
          c.start += consumed;
          if (c.start == c.buffer.size()) {
            c.buffer.clear();
            c.start = 0;
          }
          next_ = k + 1;
          return Envelope{static_cast<NodeId>(k + 1), std::move(*frame)};
        }
        if (c.eof) {
          const bool partial = c.start != c.buffer.size();
          c.fd.reset();
          throw Error(partial ? Errc::truncated : Errc::transport,
                      "worker " + std::to_string(k + 1) + " disconnected" +
                          (partial ? " mid-frame" : ""));
        }
      }
      wait_readable();
    }
  }

  void close() noexcept override {
    for (auto& c : conns_) {
      if (c.fd) ::shutdown(c.fd.get(), SHUT_RDWR);
      c.fd.reset();
    }
  }

 private:
  struct Connection {
    Fd fd;
    std::vector<std::uint8_t> buffer;
    std::size_t start;
    bool eof;
  };

  void wait_readable() {
    std::vector<pollfd> fds;
    std::vector<std::size_t> index;
    for (std::size_t k = 0; k < conns_.size(); ++k) {
      if (conns_[k].fd && !conns_[k].eof) {
        fds.push_back(pollfd{conns_[k].fd.get(), POLLIN, 0});
        index.push_back(k);
      }
    }
    if (fds.empty()) throw Error(Errc::transport, "all workers disconnected");
    while (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno != EINTR) throw_errno(Errc::transport, "poll failed");
    }
    std::uint8_t chunk[64 * 1024];
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].revents == 0) continue;
      auto& c = conns_[index[i]];
      const auto got = ::recv(c.fd.get(), chunk, sizeof chunk, MSG_DONTWAIT);
      if (got > 0) {
        c.buffer.insert(c.buffer.end(), chunk, chunk + got);
      } else if (got == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) {
        c.eof = true;
      }
    }
  }

  std::vector<Connection> conns_;
  std::size_t next_ = 0;
};

class TcpWorkerEndpoint final : public Endpoint {
 public:
  TcpWorkerEndpoint(Fd socket, NodeId self, std::size_t workers)
      : socket_(std::move(socket)), self_(self), workers_(workers) {}
  ~TcpWorkerEndpoint() override { close(); }

  NodeId self() const noexcept override { return self_; }
  std::size_t worker_count() const noexcept override { return workers_; }

  void send(NodeId dest, const Frame& f) override {
    if (dest != kBossId) throw Error(Errc::transport, "workers may only send to the boss");
    if (!socket_) throw Error(Errc::transport, "endpoint closed");
    FdSink sink(socket_.get());
    write_frame(sink, f);
  }

  Envelope recv() override {
    if (!socket_) throw Error(Errc::transport, "endpoint closed");
    FdSource source(socket_.get());
    try {
      return Envelope{kBossId, read_frame(source)};
    } catch (const Error& e) {
      if (e.code() == Errc::transport)
        throw Error(Errc::transport, std::string("boss disconnected: ") + e.what());
      throw;
    }
  }

  void close() noexcept override {
    if (socket_) ::shutdown(socket_.get(), SHUT_RDWR);
    socket_.reset();
  }

 private:
  Fd socket_;
  NodeId self_;
  std::size_t workers_;
};

}  // namespace

HostPort parse_host_port(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos)
    throw Error(Errc::usage, "expected host:port, got '" + std::string(text) + "'");
  auto host = text.substr(0, colon);
  const auto port_text = text.substr(colon + 1);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']')
    host = host.substr(1, host.size() - 2);
  unsigned port = 0;
  const auto [end, ec] =
      std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || end != port_text.data() + port_text.size() || port > 65535 ||
      port_text.empty())
    throw Error(Errc::usage, "bad port in '" + std::string(text) + "'");
  return HostPort{std::string(host), static_cast<std::uint16_t>(port)};
}

std::unique_ptr<Endpoint> tcp_boss_endpoint(const TcpBossOptions& options) {
  const auto hp = parse_host_port(options.listen);
  const auto deadline = Clock::now() + options.accept_timeout;

  Fd listener;
  std::string last_error = "no usable address";
  const auto info = resolve(hp, true);
  for (auto* ai = info.get(); ai && !listener; ai = ai->ai_next) {
    Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s) continue;
    int one = 1;
    ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.get(), ai->ai_addr, ai->ai_addrlen) == 0 &&
        ::listen(s.get(), static_cast<int>(options.workers) + 8) == 0)
      listener = std::move(s);
    else
      last_error = std::strerror(errno);
  }
  if (!listener) throw Error(Errc::startup, "cannot listen on " + options.listen + ": " + last_error);

  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&bound), &len);
  const auto port = bound.ss_family == AF_INET6
                        ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                        : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  if (options.on_listening) options.on_listening(port);

  std::vector<Fd> sockets;
  while (sockets.size() < options.workers) {
    pollfd pfd{listener.get(), POLLIN, 0};
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw_errno(Errc::startup, "poll on listener failed");
    }
    if (rc == 0)
      throw Error(Errc::startup, "only " + std::to_string(sockets.size()) + " of " +
                                     std::to_string(options.workers) +
                                     " workers connected before the timeout");
    Fd conn(::accept(listener.get(), nullptr, nullptr));
    if (!conn) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      throw_errno(Errc::startup, "accept failed");
    }
    set_nodelay(conn.get());
    const auto id = static_cast<NodeId>(sockets.size() + 1);
    FdSink sink(conn.get());
    write_frame(sink, Frame{MessageKind::info_response, id,
                            encode(Value(static_cast<std::uint64_t>(options.workers)))});
    sockets.push_back(std::move(conn));
  }
  return std::make_unique<TcpBossEndpoint>(std::move(sockets));
}

std::unique_ptr<Endpoint> tcp_worker_endpoint(const TcpWorkerOptions& options) {
  const auto hp = parse_host_port(options.connect);
  const auto deadline = Clock::now() + options.connect_timeout;

  Fd socket;
  std::string last_error;
  while (!socket) {
    auto info = resolve(hp, false);
    for (auto* ai = info.get(); ai && !socket; ai = ai->ai_next) {
      Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
      if (!s) continue;
      if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0)
        socket = std::move(s);
      else
        last_error = std::strerror(errno);
    }
    if (socket) break;
    if (Clock::now() >= deadline)
      throw Error(Errc::startup, "cannot connect to " + options.connect + ": " + last_error);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  set_nodelay(socket.get());

  pollfd pfd{socket.get(), POLLIN, 0};
  int rc;
  while ((rc = ::poll(&pfd, 1, remaining_ms(deadline))) < 0 && errno == EINTR) {
  }
  if (rc <= 0) throw Error(Errc::startup, "no handshake from boss at " + options.connect);

  FdSource source(socket.get());
  Frame hello;
  try {
    hello = read_frame(source);
  } catch (const Error& e) {
    throw Error(Errc::startup, std::string("handshake failed: ") + e.what());
  }
  if (hello.kind != MessageKind::info_response || hello.job_type == kBossId)
    throw Error(Errc::startup, "unexpected handshake frame " + std::string(to_string(hello.kind)));
  const auto workers = decode(hello.payload).as_unsigned();
  return std::make_unique<TcpWorkerEndpoint>(std::move(socket), hello.job_type,
                                             static_cast<std::size_t>(workers));
}

}  // namespace mpq
