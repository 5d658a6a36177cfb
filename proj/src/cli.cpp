#include "mpq/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "mpq/apps/factor.hpp"
#include "mpq/apps/matsquare.hpp"
#include "mpq/apps/queens.hpp"
#include "mpq/metrics.hpp"
#include "mpq/runtime.hpp"

namespace mpq::cli {

namespace {

using Clock = std::chrono::steady_clock;

struct Flags {
  std::string transport = "inproc";
  std::string role = "boss";
  std::int64_t timeout_ms = 10000;
  std::string load_csv;
};

void add_cluster_flags(CLI::App& sub, RunConfig& cfg, Flags& flags, bool tcp_capable) {
  sub.add_option("--workers", cfg.workers, "Number of worker nodes")->capture_default_str();
  if (!tcp_capable) return;
  sub.add_option("--transport", flags.transport, "Transport backend")
      ->check(CLI::IsMember({"inproc", "tcp"}))
      ->capture_default_str();
  sub.add_option("--role", flags.role, "Node role in tcp mode")
      ->check(CLI::IsMember({"boss", "worker"}))
      ->capture_default_str();
  sub.add_option("--listen", cfg.listen, "Boss listen address host:port (tcp)");
  sub.add_option("--connect", cfg.connect, "Boss address host:port for workers (tcp)");
  sub.add_option("--timeout-ms", flags.timeout_ms, "TCP accept/connect timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub.add_option("--load-csv", flags.load_csv, "Write the boss load samples to this CSV file");
}

std::string describe(const CLI::ParseError& e, const CLI::App& app) {
  std::ostringstream os;
  os << e.what() << "\n";
  if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
    os << "Run with " << sub->get_name() << " --help for more information.";
  else
    os << "Run with --help for more information.";
  return os.str();
}

apps::Matrix make_matrix(const RunConfig& cfg) {
  apps::Matrix m(cfg.dim);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> small(-9, 9);
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  for (auto& x : m.entries) x = cfg.integer_entries ? small(rng) : real(rng);
  return m;
}

WorkerSetup setup_for(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::factor:
      return [](WorkerRegistry& reg, NodeId) { apps::register_factor_workers(reg); };
    case Command::matsquare:
      return [](WorkerRegistry& reg, NodeId) { apps::register_matsquare_workers(reg); };
    case Command::queens: {
      const apps::QueensParams params{cfg.size, cfg.overflow};
      return [params](WorkerRegistry& reg, NodeId) { apps::register_queens_workers(reg, params); };
    }
    default:
      throw Error(Errc::usage, "command has no worker role");
  }
}

ClusterConfig cluster_for(const RunConfig& cfg, std::ostream& err) {
  ClusterConfig cluster;
  if (cfg.transport == Transport::inproc) {
    cluster.transport = InprocOptions{cfg.workers, std::nullopt};
  } else if (cfg.role == Role::boss) {
    TcpBossOptions opts{cfg.listen, cfg.workers, cfg.timeout, nullptr};
    opts.on_listening = [&err](std::uint16_t port) {
      err << "mpq: listening on port " << port << std::endl;
    };
    cluster.transport = std::move(opts);
  } else {
    cluster.transport = TcpWorkerOptions{cfg.connect, cfg.timeout};
  }
  return cluster;
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

int run_supervised(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto boss = start(cluster_for(cfg, err), setup_for(cfg));
  if (!boss) return kExitOk;  // worker role, stopped by the boss

  const auto t0 = Clock::now();
  switch (cfg.command) {
    case Command::factor: {
      const auto primes = apps::factorize(*boss, cfg.n);
      out << apps::format_factorization(cfg.n, primes) << "\n";
      break;
    }
    case Command::queens:
      out << "solutions = " << apps::solve_queens(*boss) << "\n";
      break;
    case Command::matsquare: {
      const auto m = make_matrix(cfg);
      const auto sq = apps::matsquare(*boss, m);
      double checksum = 0.0;
      for (const auto x : sq.entries) checksum += x;
      out << "dim = " << sq.dim << "\n";
      out << "checksum = " << format_double("%.17g", checksum) << "\n";
      break;
    }
    default:
      break;
  }
  const std::chrono::duration<double> elapsed = Clock::now() - t0;
  if (cfg.load_csv) emit_load_csv(boss->samples(), *cfg.load_csv);
  boss->stop();
  out << "time = " << format_double("%.6f", elapsed.count()) << " s\n";
  return kExitOk;
}

}  // namespace

RunConfig parse_args(int argc, const char* const* argv) {
  RunConfig cfg;
  Flags flags;
  CLI::App app{"Self-submitting parallel job queue: examples and benchmarks", "mpq"};
  app.require_subcommand(1);

  auto* factor = app.add_subcommand("factor", "Prime factorization by self-submitted splitting");
  factor->add_option("--n", cfg.n, "Integer to factor (>= 2)")
      ->required()
      ->check(CLI::Range(std::uint64_t{2}, std::numeric_limits<std::uint64_t>::max()));
  add_cluster_flags(*factor, cfg, flags, true);

  auto* matsq = app.add_subcommand("matsquare", "Square a random matrix row by row");
  matsq->add_option("--dim", cfg.dim, "Matrix dimension")
      ->check(CLI::Range(std::size_t{1}, std::size_t{4096}))
      ->capture_default_str();
  matsq->add_option("--seed", cfg.seed, "Random seed for the matrix")->capture_default_str();
  matsq->add_flag("--integer", cfg.integer_entries, "Use small integer entries");
  add_cluster_flags(*matsq, cfg, flags, true);

  auto* queens = app.add_subcommand("queens", "Count non-attacking queen placements");
  queens->add_option("--size", cfg.size, "Board size")
      ->check(CLI::Range(std::uint32_t{1}, std::uint32_t{32}))
      ->capture_default_str();
  queens->add_option("--overflow", cfg.overflow, "Local stack size that triggers a spill")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  add_cluster_flags(*queens, cfg, flags, true);

  auto* bench = app.add_subcommand("bench-overhead", "Sleep-job overhead benchmark (inproc)");
  bench->add_option("--jobs", cfg.jobs, "Job counts to measure")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--payload", cfg.payload, "Doubles echoed per job")->capture_default_str();
  bench->add_option("--sleep-ms", cfg.sleep_ms, "Sleep per job in milliseconds")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_cluster_flags(*bench, cfg, flags, false);

  auto* scaling = app.add_subcommand("scaling", "Queens speedup/efficiency table (inproc)");
  scaling->add_option("--size", cfg.size, "Board size")
      ->check(CLI::Range(std::uint32_t{1}, std::uint32_t{32}))
      ->capture_default_str();
  scaling->add_option("--overflow", cfg.overflow, "Local stack size that triggers a spill")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  scaling->add_option("--worker-counts", cfg.worker_counts, "Worker counts; must include 1")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw Error(Errc::usage, describe(e, app));
  }

  if (factor->parsed()) cfg.command = Command::factor;
  if (matsq->parsed()) cfg.command = Command::matsquare;
  if (queens->parsed()) cfg.command = Command::queens;
  if (bench->parsed()) cfg.command = Command::bench_overhead;
  if (scaling->parsed()) cfg.command = Command::scaling;

  cfg.transport = flags.transport == "tcp" ? Transport::tcp : Transport::inproc;
  cfg.role = flags.role == "worker" ? Role::worker : Role::boss;
  cfg.timeout = std::chrono::milliseconds(flags.timeout_ms);
  if (!flags.load_csv.empty()) cfg.load_csv = flags.load_csv;

  if (cfg.transport == Transport::inproc) {
    if (cfg.role == Role::worker) throw Error(Errc::usage, "--role worker requires --transport tcp");
    if (cfg.workers < 1) throw Error(Errc::usage, "--workers must be at least 1");
  } else if (cfg.role == Role::boss) {
    if (cfg.listen.empty()) throw Error(Errc::usage, "--transport tcp needs --listen in the boss role");
    if (cfg.workers < 1) throw Error(Errc::usage, "--workers must be at least 1");
  } else if (cfg.connect.empty()) {
    throw Error(Errc::usage, "--transport tcp needs --connect in the worker role");
  }
  if (cfg.transport == Transport::tcp) {
    if (!cfg.listen.empty()) parse_host_port(cfg.listen);
    if (!cfg.connect.empty()) parse_host_port(cfg.connect);
  }
  return cfg;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  switch (cfg.command) {
    case Command::factor:
    case Command::matsquare:
    case Command::queens:
      return run_supervised(cfg, out, err);
    case Command::bench_overhead: {
      std::vector<OverheadReport> rows;
      const auto sleep = std::chrono::microseconds(static_cast<std::int64_t>(cfg.sleep_ms * 1000.0));
      for (const auto n : cfg.jobs) rows.push_back(bench_overhead(n, cfg.payload, sleep, cfg.workers));
      print_overhead_table(rows, out);
      return kExitOk;
    }
    case Command::scaling: {
      const apps::QueensParams params{cfg.size, cfg.overflow};
      std::uint64_t expected = 0;
      bool first = true;
      const auto rows = scaling_report(
          [&](std::size_t workers) {
            const auto count = apps::queens_count(params.size, params.overflow, workers);
            if (!first && count != expected)
              throw Error(Errc::application, "solution count changed between runs");
            expected = count;
            first = false;
          },
          cfg.worker_counts);
      out << "size = " << cfg.size << ", overflow = " << cfg.overflow
          << ", solutions = " << expected << "\n";
      print_scaling_table(rows, out);
      return kExitOk;
    }
  }
  return kExitFailure;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(argc, argv);
  } catch (const HelpRequested& help) {
    out << help.text;
    return kExitOk;
  } catch (const Error& e) {
    err << "mpq: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    return run(cfg, out, err);
  } catch (const Error& e) {
    err << "mpq: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == Errc::usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "mpq: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace mpq::cli
