#include "mpq/apps/matsquare.hpp"

#include <memory>

namespace mpq::apps {

Matrix Matrix::identity(std::size_t d) {
  Matrix m(d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

Value to_value(const Matrix& m) {
  Value::Record rec;
  rec.emplace("dim", Value(static_cast<std::uint64_t>(m.dim)));
  rec.emplace("entries", mpq::to_value(m.entries));
  return Value(std::move(rec));
}

Matrix matrix_from_value(const Value& v) {
  Matrix m;
  m.dim = from_value<std::size_t>(v.at("dim"));
  m.entries = from_value<std::vector<double>>(v.at("entries"));
  if (m.dim == 0 || m.entries.size() != m.dim * m.dim)
    throw Error(Errc::malformed_payload, "matrix entry count does not match its dimension");
  return m;
}

std::vector<double> square_row(const Matrix& m, std::size_t row) {
  std::vector<double> out(m.dim, 0.0);
  for (std::size_t j = 0; j < m.dim; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < m.dim; ++k) sum += m(row, k) * m(k, j);
    out[j] = sum;
  }
  return out;
}

void register_matsquare_workers(WorkerRegistry& registry) {
  auto local = std::make_shared<Matrix>();
  registry.on_job(kMatsquareData, [local](const Job& job, WorkerContext&) -> Payload {
    *local = matrix_from_value(decode(job.data));
    return {};
  });
  registry.on_job(kMatsquareMultiply, [local](const Job& job, WorkerContext& ctx) -> Payload {
    const auto pos = unpack<std::size_t>(job.data);
    if (local->dim == 0) throw Error(Errc::application, "MULTIPLY before the matrix was shared");
    if (pos >= local->dim) throw Error(Errc::application, "row index out of range");
    Value::Record rec;
    rec.emplace("pos", Value(static_cast<std::uint64_t>(pos)));
    rec.emplace("result", mpq::to_value(square_row(*local, pos)));
    ctx.task(Job{kMatsquareResult, encode(Value(std::move(rec)))});
    return {};
  });
}

Matrix matsquare(Boss& boss, const Matrix& m) {
  if (m.dim == 0 || m.entries.size() != m.dim * m.dim)
    throw Error(Errc::application, "matsquare needs a non-empty square matrix");

  Matrix square(m.dim);
  boss.on_task(kMatsquareResult, [&square](const Job& job, const TaskContext&) -> Payload {
    const auto v = decode(job.data);
    const auto pos = from_value<std::size_t>(v.at("pos"));
    const auto row = from_value<std::vector<double>>(v.at("result"));
    if (pos >= square.dim || row.size() != square.dim)
      throw Error(Errc::application, "RESULT row does not fit the square");
    std::copy(row.begin(), row.end(), square.entries.begin() + static_cast<std::ptrdiff_t>(pos * square.dim));
    return {};
  });

  try {
    boss.share_data(kMatsquareData, encode(to_value(m)));
    JobQueue inqueue;
    for (std::size_t i = 0; i < m.dim; ++i) inqueue.push_back(Job{kMatsquareMultiply, pack(i)});
    boss.run_jobs(std::move(inqueue));
  } catch (...) {
    boss.remove_task(kMatsquareResult);
    throw;
  }
  boss.remove_task(kMatsquareResult);
  return square;
}

}  // namespace mpq::apps
