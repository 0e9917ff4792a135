#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp. The OpenMP versions
// reduce over fixed-size blocks in a fixed order, so their output does not
// depend on the thread count; they may differ from the serial reference only
// by floating-point summation order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polaudit {

// Compressed sparse rows (or columns, when built by transpose()).
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;  // rows + 1 entries
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  SparseMatrix transpose() const;
};

// Binary logistic-regression training problem. Labels are 0/1.
struct LogisticProblem {
  SparseMatrix by_row;
  SparseMatrix by_col;  // transpose of by_row, used by the column-parallel gradient
  std::vector<std::uint8_t> labels;

  LogisticProblem(SparseMatrix rows, std::vector<std::uint8_t> labels);
  std::size_t samples() const { return by_row.rows; }
  std::size_t dims() const { return by_row.cols; }
};

// Mean log-loss plus (l2/2)*||w||^2; the bias is not regularized.
struct Objective {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

// Numerically stable sigmoid and log(1 + exp(x)).
double sigmoid(double x);
double softplus(double x);

namespace kernels {

enum class Backend { Serial, OpenMP };

namespace serial {
Objective logistic_objective(const LogisticProblem& problem, std::span<const double> w, double b,
                             double l2);
// Hashed n-gram term counts for each token list, L2-normalized; one row per list.
SparseMatrix hash_ngrams(std::span<const std::vector<std::string>> docs, std::uint32_t dims,
                         int ngram_min, int ngram_max);
}  // namespace serial

namespace omp {
Objective logistic_objective(const LogisticProblem& problem, std::span<const double> w, double b,
                             double l2);
SparseMatrix hash_ngrams(std::span<const std::vector<std::string>> docs, std::uint32_t dims,
                         int ngram_min, int ngram_max);
}  // namespace omp

Objective logistic_objective(Backend backend, const LogisticProblem& problem,
                             std::span<const double> w, double b, double l2);
SparseMatrix hash_ngrams(Backend backend, std::span<const std::vector<std::string>> docs,
                         std::uint32_t dims, int ngram_min, int ngram_max);

// Hashed term counts of one token list, as sorted (index, value) pairs.
void hash_ngram_row(const std::vector<std::string>& tokens, std::uint32_t dims, int ngram_min,
                    int ngram_max, std::vector<std::uint32_t>& indices,
                    std::vector<double>& values);

}  // namespace kernels
}  // namespace polaudit
