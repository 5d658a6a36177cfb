#include "mpq/load.hpp"

#include <fstream>
#include <ostream>

#include "mpq/error.hpp"

namespace mpq {

void LoadRecorder::start() {
  origin_ = std::chrono::steady_clock::now();
  samples_.clear();
}

void LoadRecorder::record(std::uint64_t active_workers, std::uint64_t queued_jobs) {
  const std::chrono::duration<double> t = std::chrono::steady_clock::now() - origin_;
  samples_.push_back(LoadSample{t.count(), active_workers, queued_jobs});
}

void write_load_csv(std::span<const LoadSample> samples, std::ostream& os) {
  os << kLoadCsvHeader << '\n';
  const auto precision = os.precision(9);
  for (const auto& s : samples)
    os << std::fixed << s.t_sec << ',' << s.active_workers << ',' << s.queued_jobs << '\n';
  os.unsetf(std::ios::floatfield);
  os.precision(precision);
}

void emit_load_csv(std::span<const LoadSample> samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::transport, "cannot open " + path.string() + " for writing");
  write_load_csv(samples, out);
  out.flush();
  if (!out) throw Error(Errc::transport, "failed writing " + path.string());
}

}  // namespace mpq
