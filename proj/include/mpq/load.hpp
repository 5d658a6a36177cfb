#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mpq {

/// Boss-side snapshot taken after every supervision state change.
struct LoadSample {
  double t_sec = 0.0;  ///< seconds since supervision started (monotonic clock)
  std::uint64_t active_workers = 0;
  std::uint64_t queued_jobs = 0;

  friend bool operator==(const LoadSample&, const LoadSample&) = default;
};

class LoadRecorder {
 public:
  void start();
  void record(std::uint64_t active_workers, std::uint64_t queued_jobs);
  const std::vector<LoadSample>& samples() const noexcept { return samples_; }

 private:
  std::chrono::steady_clock::time_point origin_{};
  std::vector<LoadSample> samples_;
};

inline constexpr const char* kLoadCsvHeader = "t_sec,active_workers,queued_jobs";

void write_load_csv(std::span<const LoadSample> samples, std::ostream& os);

/// Writes the CSV to `path`; throws Errc::transport if the file cannot be
/// written.
void emit_load_csv(std::span<const LoadSample> samples, const std::filesystem::path& path);

}  // namespace mpq
