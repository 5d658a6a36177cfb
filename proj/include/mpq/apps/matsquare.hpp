#pragma once

// Squares a matrix row by row. The boss shares the matrix with every worker,
// queues one MULTIPLY job per row, and collects each finished row through a
// RESULT task that writes it straight into the square.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mpq/runtime.hpp"

namespace mpq::apps {

enum MatsquareJob : JobType {
  kMatsquareData = 1,
  kMatsquareMultiply = 2,
  kMatsquareResult = 3,
};

/// Dense square matrix, row-major.
struct Matrix {
  std::size_t dim = 0;
  std::vector<double> entries;

  Matrix() = default;
  explicit Matrix(std::size_t d) : dim(d), entries(d * d, 0.0) {}

  static Matrix identity(std::size_t d);

  double& operator()(std::size_t row, std::size_t col) { return entries[row * dim + col]; }
  double operator()(std::size_t row, std::size_t col) const { return entries[row * dim + col]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

Value to_value(const Matrix& m);
Matrix matrix_from_value(const Value& v);

/// Row `row` of m*m, summing over k in increasing order.
std::vector<double> square_row(const Matrix& m, std::size_t row);

/// Each worker keeps its own copy of the shared matrix.
void register_matsquare_workers(WorkerRegistry& registry);

Matrix matsquare(Boss& boss, const Matrix& m);

}  // namespace mpq::apps
