#pragma once

// Message framing and the transport contract between boss and workers.
//
// A frame is a 13-byte little-endian header followed by the payload:
//
//   offset  size  field
//   0       2     magic "MQ" (0x4D 0x51)
//   2       1     protocol version (0x01)
//   3       1     message kind
//   4       4     job type (0 when not applicable)
//   8       4     payload length
//   12      1     reserved, always 0x00
//   13      n     payload

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mpq/codec.hpp"

namespace mpq {

/// 0 is the boss, 1..=W are workers.
using NodeId = std::uint32_t;
inline constexpr NodeId kBossId = 0;

using JobType = std::uint32_t;

inline constexpr std::uint8_t kFrameMagic0 = 0x4D;
inline constexpr std::uint8_t kFrameMagic1 = 0x51;
inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::size_t kFrameHeaderSize = 13;

enum class MessageKind : std::uint8_t {
  job_assign = 0x01,
  job_result = 0x02,
  job_submit = 0x03,
  task_request = 0x04,
  task_response = 0x05,
  info_request = 0x06,
  info_response = 0x07,
  data_share = 0x08,
  stop = 0x09,
};

std::string_view to_string(MessageKind kind) noexcept;

struct Frame {
  MessageKind kind = MessageKind::stop;
  JobType job_type = 0;
  Payload payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  /// Writes all of `bytes` or throws Errc::transport.
  virtual void write(ByteView bytes) = 0;
};

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  /// Reads up to `buffer.size()` bytes; returns 0 only at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
};

class StreamSink final : public ByteSink {
 public:
  explicit StreamSink(std::ostream& os) : os_(os) {}
  void write(ByteView bytes) override;

 private:
  std::ostream& os_;
};

class StreamSource final : public ByteSource {
 public:
  explicit StreamSource(std::istream& is) : is_(is) {}
  std::size_t read_some(std::span<std::uint8_t> buffer) override;

 private:
  std::istream& is_;
};

/// Header plus payload as one contiguous buffer.
Payload encode_frame(const Frame& f);

void write_frame(ByteSink& sink, const Frame& f);

/// Reads exactly one frame. Throws Errc::protocol on bad magic, version or
/// kind and Errc::truncated on end of stream mid-frame. End of stream at a
/// frame boundary is reported as Errc::transport.
Frame read_frame(ByteSource& source);

/// Incremental parse from a receive buffer. Returns the frame and advances
/// `consumed` when `bytes` starts with a complete frame; returns nullopt when
/// more bytes are needed. A bad header throws Errc::protocol as soon as the
/// offending byte is visible.
std::optional<Frame> try_parse_frame(ByteView bytes, std::size_t& consumed);

struct Envelope {
  NodeId source = kBossId;
  Frame frame;
};

/// One node's connection to the rest of the cluster. Per ordered pair of
/// nodes, frames arrive in send order. An endpoint is driven by a single
/// execution context.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual NodeId self() const noexcept = 0;
  virtual std::size_t worker_count() const noexcept = 0;

  virtual void send(NodeId dest, const Frame& f) = 0;

  /// Blocks until a frame from any peer is available. A peer that
  /// disconnects surfaces as Errc::transport once its earlier frames have
  /// been delivered.
  virtual Envelope recv() = 0;

  /// Boss only: send `f` to every worker in id order.
  virtual void broadcast(const Frame& f);

  /// Idempotent. Peers observe the disconnect after draining earlier frames.
  virtual void close() noexcept = 0;
};

enum class TraceDirection : std::uint8_t { sent, received };

struct TraceEvent {
  TraceDirection direction;
  NodeId peer;
  MessageKind kind;
  JobType job_type;
  Payload payload;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
  friend auto operator<=>(const TraceEvent&, const TraceEvent&) = default;
};

/// Thread-safe log of frames seen by one endpoint.
class FrameTrace {
 public:
  void record(TraceEvent event);
  std::vector<TraceEvent> events() const;
  std::size_t count(TraceDirection direction, MessageKind kind) const;

 private:
  mutable std::mutex mutex_;
  std::vector<TraceEvent> events_;
};

/// Decorator that records every frame passing through the wrapped endpoint.
class TracingEndpoint final : public Endpoint {
 public:
  TracingEndpoint(std::unique_ptr<Endpoint> inner, std::shared_ptr<FrameTrace> trace)
      : inner_(std::move(inner)), trace_(std::move(trace)) {}

  NodeId self() const noexcept override { return inner_->self(); }
  std::size_t worker_count() const noexcept override { return inner_->worker_count(); }
  void send(NodeId dest, const Frame& f) override;
  Envelope recv() override;
  void broadcast(const Frame& f) override;
  void close() noexcept override { inner_->close(); }

 private:
  std::unique_ptr<Endpoint> inner_;
  std::shared_ptr<FrameTrace> trace_;
};

}  // namespace mpq
