#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mpq/cli.hpp"
#include "mpq/load.hpp"

using namespace mpq;
using namespace mpq::cli;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<const char*> args) {
  args.insert(args.begin(), "mpq");
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(args.size()), args.data(), out, err);
  return {code, out.str(), err.str()};
}

RunConfig parse(std::vector<const char*> args) {
  args.insert(args.begin(), "mpq");
  return parse_args(static_cast<int>(args.size()), args.data());
}

Errc parse_error(std::vector<const char*> args) {
  try {
    parse(std::move(args));
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a usage error");
  return Errc::application;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

int shell_status(const std::string& cmd) {
  const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("parse queens options") {
  const auto cfg = parse({"queens", "--size", "10", "--overflow", "20", "--workers", "8"});
  CHECK(cfg.command == Command::queens);
  CHECK(cfg.size == 10);
  CHECK(cfg.overflow == 20);
  CHECK(cfg.workers == 8);
  CHECK(cfg.transport == Transport::inproc);
  CHECK_FALSE(cfg.load_csv.has_value());
}

TEST_CASE("parse tcp roles") {
  const auto boss = parse({"factor", "--n", "120", "--transport", "tcp", "--listen", "127.0.0.1:0", "--workers", "3"});
  CHECK(boss.transport == Transport::tcp);
  CHECK(boss.role == Role::boss);
  CHECK(boss.listen == "127.0.0.1:0");

  const auto worker = parse({"factor", "--n", "120", "--transport", "tcp", "--role", "worker", "--connect", "localhost:5000"});
  CHECK(worker.role == Role::worker);
  CHECK(worker.connect == "localhost:5000");
}

TEST_CASE("parse list options") {
  const auto bench = parse({"bench-overhead", "--jobs", "10,20", "--payload", "1000", "--sleep-ms", "2.5"});
  CHECK(bench.jobs == std::vector<std::size_t>{10, 20});
  CHECK(bench.payload == 1000);
  CHECK(bench.sleep_ms == doctest::Approx(2.5));

  const auto scaling = parse({"scaling", "--worker-counts", "1,3"});
  CHECK(scaling.worker_counts == std::vector<std::size_t>{1, 3});
}

TEST_CASE("usage errors") {
  CHECK(parse_error({"factor", "--n", "1"}) == Errc::usage);
  CHECK(parse_error({"factor"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "abc"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "12", "--bogus"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "12", "--transport", "tcp"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "12", "--transport", "tcp", "--role", "worker"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "12", "--role", "worker"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "12", "--workers", "0"}) == Errc::usage);
  CHECK(parse_error({"queens", "--overflow", "1"}) == Errc::usage);
  CHECK(parse_error({"queens", "--size", "0"}) == Errc::usage);
  CHECK(parse_error({"factor", "--n", "12", "--transport", "tcp", "--listen", "nope"}) == Errc::usage);
  CHECK(parse_error({}) == Errc::usage);
}

TEST_CASE("factor prints the factorization") {
  const auto r = invoke({"factor", "--n", "120", "--workers", "3"});
  CHECK(r.code == kExitOk);
  CHECK(first_line(r.out) == "120 = 2 * 2 * 2 * 3 * 5");
  CHECK(r.out.find("time = ") != std::string::npos);
}

TEST_CASE("queens prints the solution count") {
  const auto r = invoke({"queens", "--size", "6", "--overflow", "3", "--workers", "2"});
  CHECK(r.code == kExitOk);
  CHECK(first_line(r.out) == "solutions = 4");
}

TEST_CASE("matsquare output is deterministic for a seed") {
  const auto a = invoke({"matsquare", "--dim", "6", "--seed", "5", "--workers", "3"});
  const auto b = invoke({"matsquare", "--dim", "6", "--seed", "5", "--workers", "1"});
  REQUIRE(a.code == kExitOk);
  CHECK(first_line(a.out) == "dim = 6");
  auto checksum = [](const std::string& s) { return s.substr(0, s.find("time = ")); };
  CHECK(checksum(a.out) == checksum(b.out));

  const auto i = invoke({"matsquare", "--dim", "2", "--integer", "--seed", "3"});
  CHECK(i.code == kExitOk);
}

TEST_CASE("load csv from a queens run") {
  const auto path = std::filesystem::temp_directory_path() / "mpq-test-load.csv";
  std::filesystem::remove(path);
  const auto path_str = path.string();
  const auto r = invoke({"queens", "--size", "8", "--workers", "4", "--load-csv", path_str.c_str()});
  CHECK(r.code == kExitOk);
  CHECK(first_line(r.out) == "solutions = 92");

  std::ifstream in(path);
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  CHECK(line == kLoadCsvHeader);
  std::size_t rows = 0;
  std::uint64_t peak = 0;
  while (std::getline(in, line)) {
    ++rows;
    double t = 0;
    unsigned long long active = 0, queued = 0;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%llu,%llu", &t, &active, &queued) == 3);
    peak = std::max<std::uint64_t>(peak, active);
  }
  CHECK(rows > 3);
  CHECK(peak == 4);
  std::filesystem::remove(path);
}

TEST_CASE("bench-overhead and scaling print tables") {
  const auto bench = invoke({"bench-overhead", "--jobs", "8", "--sleep-ms", "1", "--workers", "2"});
  CHECK(bench.code == kExitOk);
  CHECK(bench.out.find("per job") != std::string::npos);

  const auto scaling = invoke({"scaling", "--size", "6", "--worker-counts", "1,2"});
  CHECK(scaling.code == kExitOk);
  CHECK(first_line(scaling.out) == "size = 6, overflow = 8, solutions = 4");

  const auto no_base = invoke({"scaling", "--size", "6", "--worker-counts", "2,4"});
  CHECK(no_base.code == kExitUsage);
}

TEST_CASE("help exits cleanly") {
  const auto r = invoke({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("queens") != std::string::npos);
}

TEST_CASE("binary exit codes") {
  const std::string bin = MPQ_BINARY;
  CHECK(shell_status(bin + " factor --n 91 --workers 2") == 0);
  CHECK(shell_status(bin + " factor --n 1") == 2);
  CHECK(shell_status(bin + " frobnicate") == 2);
  CHECK(shell_status(bin + " queens --size 8 --load-csv /nonexistent-dir/x.csv") == 1);
}
