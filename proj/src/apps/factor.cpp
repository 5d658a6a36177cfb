#include "mpq/apps/factor.hpp"

#include <algorithm>
#include <cmath>

namespace mpq::apps {

std::uint64_t isqrt(std::uint64_t n) noexcept {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r > n / r) --r;
  while ((r + 1) <= n / (r + 1)) ++r;
  return r;
}

FactorPair factor_split(std::uint64_t n) {
  if (n < 2) throw Error(Errc::application, "cannot factor " + std::to_string(n) + " (need n >= 2)");
  for (auto a = isqrt(n); a > 1; --a)
    if (n % a == 0) return FactorPair{a, n / a};
  return FactorPair{1, n};
}

Payload factor_handler(const Job& job, WorkerContext& ctx) {
  const auto n = unpack<std::uint64_t>(job.data);
  const auto [a, b] = factor_split(n);
  if (a == 1) return job.data;
  ctx.submit(Job{kFactorSplit, pack(a)});
  ctx.submit(Job{kFactorSplit, pack(b)});
  return {};
}

void register_factor_workers(WorkerRegistry& registry) {
  registry.on_job(kFactorSplit, factor_handler);
}

std::vector<std::uint64_t> factorize(Boss& boss, std::uint64_t n) {
  if (n < 2) throw Error(Errc::application, "cannot factor " + std::to_string(n) + " (need n >= 2)");
  JobQueue inqueue;
  inqueue.push_back(Job{kFactorSplit, pack(n)});
  std::vector<std::uint64_t> primes;
  for (const auto& result : boss.run_jobs(std::move(inqueue)))
    primes.push_back(unpack<std::uint64_t>(result.data));
  std::sort(primes.begin(), primes.end());
  return primes;
}

std::string format_factorization(std::uint64_t n, std::span<const std::uint64_t> factors) {
  std::string out = std::to_string(n) + " =";
  for (std::size_t i = 0; i < factors.size(); ++i)
    out += (i == 0 ? " " : " * ") + std::to_string(factors[i]);
  return out;
}

}  // namespace mpq::apps
