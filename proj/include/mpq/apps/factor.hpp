#pragma once

// Prime factorization by repeated splitting. A SPLIT(n) job writes n as a*b
// with a the largest divisor not above sqrt(n); a prime comes back as the
// job's result, a composite submits SPLIT(a) and SPLIT(b) and returns nothing.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpq/runtime.hpp"

namespace mpq::apps {

inline constexpr JobType kFactorSplit = 1;

std::uint64_t isqrt(std::uint64_t n) noexcept;

struct FactorPair {
  std::uint64_t small = 1;
  std::uint64_t large = 0;
};

/// Trial division downward from floor(sqrt(n)); small == 1 means n is prime.
/// Throws Errc::application for n < 2.
FactorPair factor_split(std::uint64_t n);

Payload factor_handler(const Job& job, WorkerContext& ctx);
void register_factor_workers(WorkerRegistry& registry);

/// Returns the prime factors of n in ascending order.
std::vector<std::uint64_t> factorize(Boss& boss, std::uint64_t n);

/// "120 = 2 * 2 * 2 * 3 * 5"
std::string format_factorization(std::uint64_t n, std::span<const std::uint64_t> factors);

}  // namespace mpq::apps
