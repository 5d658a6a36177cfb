#include <doctest.h>

#include <sstream>
#include <thread>

#include "mpq/wire.hpp"
#include "support/clusters.hpp"
#include "support/generators.hpp"

using namespace mpq;

namespace {

Payload bytes_of(const Frame& f) {
  std::ostringstream os;
  StreamSink sink(os);
  write_frame(sink, f);
  const auto s = os.str();
  return Payload(s.begin(), s.end());
}

Errc read_error(const Payload& bytes) {
  std::istringstream is(std::string(bytes.begin(), bytes.end()));
  StreamSource source(is);
  try {
    read_frame(source);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("read_frame accepted invalid input");
  return Errc::usage;
}

Payload seq_payload(std::uint64_t n) { return encode(Value(n)); }

std::vector<std::vector<std::unique_ptr<Endpoint>>> both_backends(std::size_t workers) {
  std::vector<std::vector<std::unique_ptr<Endpoint>>> out;
  out.push_back(make_inproc_cluster({workers, std::nullopt}));
  out.push_back(make_inproc_cluster({workers, 99}));
  out.push_back(test::make_tcp_cluster(workers));
  return out;
}

}  // namespace

TEST_CASE("golden frame headers") {
  CHECK(bytes_of(Frame{MessageKind::stop, 0, {}}) ==
        Payload{0x4D, 0x51, 0x01, 0x09, 0, 0, 0, 0, 0, 0, 0, 0, 0});

  const auto assign = bytes_of(Frame{MessageKind::job_assign, 1, {0xAA, 0xBB, 0xCC}});
  CHECK(assign.size() == 16);
  CHECK(assign == Payload{0x4D, 0x51, 0x01, 0x01, 1, 0, 0, 0, 3, 0, 0, 0, 0, 0xAA, 0xBB, 0xCC});

  const auto typed = encode_frame(Frame{MessageKind::task_request, 0x01020304, {}});
  CHECK(Payload(typed.begin() + 4, typed.begin() + 8) == Payload{0x04, 0x03, 0x02, 0x01});
}

TEST_CASE("message kind codes are stable") {
  CHECK(static_cast<int>(MessageKind::job_assign) == 1);
  CHECK(static_cast<int>(MessageKind::job_result) == 2);
  CHECK(static_cast<int>(MessageKind::job_submit) == 3);
  CHECK(static_cast<int>(MessageKind::task_request) == 4);
  CHECK(static_cast<int>(MessageKind::task_response) == 5);
  CHECK(static_cast<int>(MessageKind::info_request) == 6);
  CHECK(static_cast<int>(MessageKind::info_response) == 7);
  CHECK(static_cast<int>(MessageKind::data_share) == 8);
  CHECK(static_cast<int>(MessageKind::stop) == 9);
}

TEST_CASE("property: read_frame inverts write_frame, frame by frame on one stream") {
  std::mt19937_64 rng(7);
  std::vector<Frame> frames;
  std::ostringstream os;
  StreamSink sink(os);
  for (int i = 0; i < 500; ++i) {
    frames.push_back(test::random_frame(rng));
    write_frame(sink, frames.back());
  }
  std::istringstream is(os.str());
  StreamSource source(is);
  for (const auto& f : frames) REQUIRE(read_frame(source) == f);
  CHECK_THROWS_AS(read_frame(source), Error);
}

TEST_CASE("read_frame errors") {
  auto good = bytes_of(Frame{MessageKind::job_assign, 1, {1, 2, 3, 4}});

  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 0x00;
    CHECK(read_error(bad) == Errc::protocol);
  }
  SUBCASE("bad version") {
    auto bad = good;
    bad[2] = 0x02;
    CHECK(read_error(bad) == Errc::protocol);
  }
  SUBCASE("unknown kind") {
    auto bad = good;
    bad[3] = 0x0A;
    CHECK(read_error(bad) == Errc::protocol);
  }
  SUBCASE("reserved byte set") {
    auto bad = good;
    bad[12] = 0x01;
    CHECK(read_error(bad) == Errc::protocol);
  }
  SUBCASE("payload shorter than the header claims") {
    auto bad = bytes_of(Frame{MessageKind::job_assign, 1, Payload(10, 7)});
    bad.resize(kFrameHeaderSize + 4);
    CHECK(read_error(bad) == Errc::truncated);
  }
  SUBCASE("header cut short") {
    good.resize(7);
    CHECK(read_error(good) == Errc::truncated);
  }
}

TEST_CASE("try_parse_frame waits for complete frames") {
  const auto a = encode_frame(Frame{MessageKind::job_submit, 3, {9, 9}});
  const auto b = encode_frame(Frame{MessageKind::stop, 0, {}});
  Payload buffer;
  buffer.insert(buffer.end(), a.begin(), a.end());
  buffer.insert(buffer.end(), b.begin(), b.end());

  for (std::size_t cut = 0; cut < a.size(); ++cut) {
    std::size_t consumed = 0;
    CHECK_FALSE(try_parse_frame(ByteView(buffer).first(cut), consumed).has_value());
    CHECK(consumed == 0);
  }
  std::size_t consumed = 0;
  auto first = try_parse_frame(buffer, consumed);
  REQUIRE(first);
  CHECK(first->job_type == 3);
  auto second = try_parse_frame(ByteView(buffer).subspan(consumed), consumed);
  REQUIRE(second);
  CHECK(second->kind == MessageKind::stop);
  CHECK(consumed == buffer.size());

  std::size_t ignored = 0;
  CHECK_THROWS_AS(try_parse_frame(Payload{0x4D, 0x00}, ignored), Error);
}

TEST_CASE("per-channel FIFO on every backend") {
  constexpr std::size_t kWorkers = 4;
  constexpr std::uint64_t kFrames = 300;
  for (auto& nodes : both_backends(kWorkers)) {
    std::vector<std::thread> threads;
    std::vector<int> worker_ok(kWorkers + 1, 0);
    for (NodeId w = 1; w <= kWorkers; ++w) {
      threads.emplace_back([&, w] {
        auto& ep = *nodes[w];
        for (std::uint64_t i = 0; i < kFrames; ++i)
          ep.send(kBossId, Frame{MessageKind::job_submit, w, seq_payload(i)});
        bool ok = true;
        for (std::uint64_t i = 0; i < kFrames; ++i) {
          auto env = ep.recv();
          ok = ok && env.source == kBossId && decode(env.frame.payload).as_unsigned() == i;
        }
        worker_ok[w] = ok;
      });
    }
    auto& boss = *nodes[0];
    for (std::uint64_t i = 0; i < kFrames; ++i)
      for (NodeId w = 1; w <= kWorkers; ++w)
        boss.send(w, Frame{MessageKind::job_assign, 1, seq_payload(i)});
    std::vector<std::uint64_t> next(kWorkers + 1, 0);
    for (std::uint64_t i = 0; i < kFrames * kWorkers; ++i) {
      auto env = boss.recv();
      REQUIRE(env.frame.job_type == env.source);
      REQUIRE(decode(env.frame.payload).as_unsigned() == next[env.source]++);
    }
    for (auto& t : threads) t.join();
    for (NodeId w = 1; w <= kWorkers; ++w) CHECK(worker_ok[w] == 1);
  }
}

TEST_CASE("broadcast reaches every worker once") {
  for (auto& nodes : both_backends(3)) {
    nodes[0]->broadcast(Frame{MessageKind::data_share, 5, {1, 2}});
    for (NodeId w = 1; w <= 3; ++w) {
      auto env = nodes[w]->recv();
      CHECK(env.frame == Frame{MessageKind::data_share, 5, {1, 2}});
    }
  }
}

TEST_CASE("backend equivalence on a scripted exchange") {
  auto script = [](std::vector<std::unique_ptr<Endpoint>> nodes) {
    const auto workers = nodes.size() - 1;
    auto trace = std::make_shared<FrameTrace>();
    TracingEndpoint boss(std::move(nodes[0]), trace);
    std::vector<std::thread> threads;
    for (NodeId w = 1; w <= workers; ++w) {
      threads.emplace_back([ep = std::move(nodes[w])] {
        for (;;) {
          auto env = ep->recv();
          if (env.frame.kind == MessageKind::stop) return;
          auto reply = env.frame.payload;
          std::reverse(reply.begin(), reply.end());
          ep->send(kBossId, Frame{MessageKind::job_result, env.frame.job_type, reply});
        }
      });
    }
    for (std::uint32_t i = 0; i < 40; ++i) {
      const NodeId dest = 1 + i % workers;
      boss.send(dest, Frame{MessageKind::job_assign, i + 1, Payload{std::uint8_t(i), 1, 2}});
      boss.recv();
    }
    boss.broadcast(Frame{MessageKind::stop, 0, {}});
    for (auto& t : threads) t.join();
    return trace->events();
  };
  const auto inproc = script(make_inproc_cluster({3, std::nullopt}));
  const auto tcp = script(test::make_tcp_cluster(3));
  CHECK(inproc.size() == 83);
  CHECK(inproc == tcp);
}

TEST_CASE("tcp handshake assigns contiguous worker ids") {
  auto nodes = test::make_tcp_cluster(3);
  CHECK(nodes[0]->self() == kBossId);
  for (NodeId w = 1; w <= 3; ++w) {
    CHECK(nodes[w]->self() == w);
    CHECK(nodes[w]->worker_count() == 3);
  }
}

TEST_CASE("disconnects surface as transport errors after earlier frames") {
  for (auto& nodes : both_backends(2)) {
    nodes[2]->send(kBossId, Frame{MessageKind::job_result, 1, {}});
    nodes[2]->close();
    auto env = nodes[0]->recv();
    CHECK(env.source == 2);
    try {
      nodes[0]->recv();
      FAIL("expected a transport error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::transport);
    }
    nodes[0]->close();
    CHECK_THROWS_AS(nodes[1]->recv(), Error);
  }
}

TEST_CASE("inproc send to a closed node fails") {
  auto nodes = make_inproc_cluster({2, std::nullopt});
  nodes[1]->close();
  CHECK_THROWS_AS(nodes[0]->send(1, Frame{MessageKind::stop, 0, {}}), Error);
  CHECK_THROWS_AS(nodes[2]->send(1, Frame{MessageKind::stop, 0, {}}), Error);
}

TEST_CASE("tcp boss startup fails when a worker never connects") {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    tcp_boss_endpoint({"127.0.0.1:0", 1, std::chrono::milliseconds(200), nullptr});
    FAIL("expected a startup error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::startup);
  }
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3));
}

TEST_CASE("host:port parsing") {
  CHECK(parse_host_port("127.0.0.1:5555").port == 5555);
  CHECK(parse_host_port("[::1]:80").host == "::1");
  CHECK_THROWS_AS(parse_host_port("localhost"), Error);
  CHECK_THROWS_AS(parse_host_port("localhost:99999"), Error);
  CHECK_THROWS_AS(parse_host_port("localhost:x"), Error);
}
