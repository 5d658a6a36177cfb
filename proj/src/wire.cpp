#include "mpq/wire.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>

namespace mpq {

namespace {

bool known_kind(std::uint8_t code) {
  return code >= static_cast<std::uint8_t>(MessageKind::job_assign) &&
         code <= static_cast<std::uint8_t>(MessageKind::stop);
}

std::uint32_t load_u32(ByteView b) {
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void store_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

struct Header {
  MessageKind kind;
  JobType job_type;
  std::uint32_t length;
};

// Validates as many header bytes as are present so a bad stream fails fast.
void check_header_prefix(ByteView b) {
  if (b.size() > 0 && b[0] != kFrameMagic0)
    throw Error(Errc::protocol, "bad frame magic");
  if (b.size() > 1 && b[1] != kFrameMagic1)
    throw Error(Errc::protocol, "bad frame magic");
  if (b.size() > 2 && b[2] != kProtocolVersion)
    throw Error(Errc::protocol, "unsupported protocol version " + std::to_string(b[2]));
  if (b.size() > 3 && !known_kind(b[3]))
    throw Error(Errc::protocol, "unknown message kind " + std::to_string(b[3]));
  if (b.size() > 12 && b[12] != 0)
    throw Error(Errc::protocol, "reserved header byte is not zero");
}

Header parse_header(ByteView b) {
  check_header_prefix(b);
  return Header{static_cast<MessageKind>(b[3]), load_u32(b.subspan(4, 4)),
                load_u32(b.subspan(8, 4))};
}

// Returns the number of bytes read; short only at end of stream.
std::size_t read_fully(ByteSource& source, std::span<std::uint8_t> buffer) {
  std::size_t got = 0;
  while (got < buffer.size()) {
    const auto n = source.read_some(buffer.subspan(got));
    if (n == 0) break;
    got += n;
  }
  return got;
}

}  // namespace

std::string_view to_string(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::job_assign: return "JobAssign";
    case MessageKind::job_result: return "JobResult";
    case MessageKind::job_submit: return "JobSubmit";
    case MessageKind::task_request: return "TaskRequest";
    case MessageKind::task_response: return "TaskResponse";
    case MessageKind::info_request: return "InfoRequest";
    case MessageKind::info_response: return "InfoResponse";
    case MessageKind::data_share: return "DataShare";
    case MessageKind::stop: return "Stop";
  }
  return "Unknown";
}

void StreamSink::write(ByteView bytes) {
  os_.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!os_) throw Error(Errc::transport, "output stream write failed");
}

std::size_t StreamSource::read_some(std::span<std::uint8_t> buffer) {
  is_.read(reinterpret_cast<char*>(buffer.data()),
           static_cast<std::streamsize>(buffer.size()));
  const auto n = static_cast<std::size_t>(is_.gcount());
  if (is_.bad()) throw Error(Errc::transport, "input stream read failed");
  return n;
}

Payload encode_frame(const Frame& f) {
  if (f.payload.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::encoding_overflow, "frame payload exceeds the 32-bit length field");
  Payload out(kFrameHeaderSize + f.payload.size());
  out[0] = kFrameMagic0;
  out[1] = kFrameMagic1;
  out[2] = kProtocolVersion;
  out[3] = static_cast<std::uint8_t>(f.kind);
  store_u32(out.data() + 4, f.job_type);
  store_u32(out.data() + 8, static_cast<std::uint32_t>(f.payload.size()));
  std::copy(f.payload.begin(), f.payload.end(), out.begin() + kFrameHeaderSize);
  return out;
}

void write_frame(ByteSink& sink, const Frame& f) { sink.write(encode_frame(f)); }

Frame read_frame(ByteSource& source) {
  std::uint8_t header[kFrameHeaderSize];
  const auto got = read_fully(source, header);
  if (got == 0) throw Error(Errc::transport, "end of stream");
  check_header_prefix(ByteView(header, got));
  if (got < kFrameHeaderSize)
    throw Error(Errc::truncated, "frame header truncated after " + std::to_string(got) + " bytes");
  const auto h = parse_header(header);
  Frame f{h.kind, h.job_type, Payload(h.length)};
  const auto body = read_fully(source, f.payload);
  if (body < h.length)
    throw Error(Errc::truncated, "frame payload truncated: expected " + std::to_string(h.length) +
                                     " bytes, got " + std::to_string(body));
  return f;
}

std::optional<Frame> try_parse_frame(ByteView bytes, std::size_t& consumed) {
  check_header_prefix(bytes.first(std::min(bytes.size(), kFrameHeaderSize)));
  if (bytes.size() < kFrameHeaderSize) return std::nullopt;
  const auto h = parse_header(bytes);
  if (bytes.size() - kFrameHeaderSize < h.length) return std::nullopt;
  const auto body = bytes.subspan(kFrameHeaderSize, h.length);
  consumed += kFrameHeaderSize + h.length;
  return Frame{h.kind, h.job_type, Payload(body.begin(), body.end())};
}

void Endpoint::broadcast(const Frame& f) {
  for (NodeId w = 1; w <= worker_count(); ++w) send(w, f);
}

void FrameTrace::record(TraceEvent event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<TraceEvent> FrameTrace::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::size_t FrameTrace::count(TraceDirection direction, MessageKind kind) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [&](const auto& e) {
    return e.direction == direction && e.kind == kind;
  }));
}

void TracingEndpoint::send(NodeId dest, const Frame& f) {
  inner_->send(dest, f);
  trace_->record({TraceDirection::sent, dest, f.kind, f.job_type, f.payload});
}

Envelope TracingEndpoint::recv() {
  auto env = inner_->recv();
  trace_->record({TraceDirection::received, env.source, env.frame.kind, env.frame.job_type,
                  env.frame.payload});
  return env;
}

void TracingEndpoint::broadcast(const Frame& f) {
  for (NodeId w = 1; w <= worker_count(); ++w) send(w, f);
}

}  // namespace mpq
