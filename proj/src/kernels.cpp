#include "polaudit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polaudit/hashing.hpp"

namespace polaudit {

namespace {

constexpr std::ptrdiff_t kBlock = 4096;

// Sum in fixed blocks: partial sums may run in parallel, the combine is serial
// and ordered, so the result is independent of the thread count.
template <typename F>
double blocked_sum(std::ptrdiff_t n, F&& term) {
  const std::ptrdiff_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::ptrdiff_t end = std::min(n, (blk + 1) * kBlock);
    double s = 0.0;
    for (std::ptrdiff_t i = blk * kBlock; i < end; ++i) s += term(i);
    partial[static_cast<std::size_t>(blk)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void check_shapes(const LogisticProblem& problem, std::span<const double> w) {
  if (w.size() != problem.dims())
    throw std::invalid_argument("weight vector does not match problem dimension");
}

}  // namespace

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.offsets.assign(cols + 1, 0);
  for (auto j : indices) ++t.offsets[j + 1];
  for (std::size_t j = 0; j < cols; ++j) t.offsets[j + 1] += t.offsets[j];
  t.indices.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      auto pos = cursor[indices[k]]++;
      t.indices[pos] = static_cast<std::uint32_t>(i);
      t.values[pos] = values[k];
    }
  }
  return t;
}

LogisticProblem::LogisticProblem(SparseMatrix rows, std::vector<std::uint8_t> labels_)
    : by_row(std::move(rows)), labels(std::move(labels_)) {
  if (labels.size() != by_row.rows) throw std::invalid_argument("label count does not match rows");
  by_col = by_row.transpose();
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace kernels {

namespace {

// Residual d(loss_i)/dz and loss_i, written so that flipping the label and
// negating z yields exactly the negated residual and the same loss.
inline void logistic_point(double z, std::uint8_t y, double& residual, double& loss) {
  if (y) {
    residual = -sigmoid(-z);
    loss = softplus(-z);
  } else {
    residual = sigmoid(z);
    loss = softplus(z);
  }
}

}  // namespace

void hash_ngram_row(const std::vector<std::string>& tokens, std::uint32_t dims, int ngram_min,
                    int ngram_max, std::vector<std::uint32_t>& indices,
                    std::vector<double>& values) {
  indices.clear();
  values.clear();
  if (dims == 0 || (dims & (dims - 1)) != 0)
    throw std::invalid_argument("hashed feature dims must be a power of two");
  const std::uint32_t mask = dims - 1;
  std::vector<std::uint32_t> hits;
  std::string gram;
  for (int n = ngram_min; n <= ngram_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (tokens.size() < un) break;
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      gram = tokens[i];
      for (std::size_t k = 1; k < un; ++k) {
        gram.push_back(' ');
        gram += tokens[i + k];
      }
      hits.push_back(static_cast<std::uint32_t>(fnv1a64(gram)) & mask);
    }
  }
  std::sort(hits.begin(), hits.end());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    const auto c = static_cast<double>(j - i);
    indices.push_back(hits[i]);
    values.push_back(c);
    norm2 += c * c;
    i = j;
  }
  if (norm2 > 0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : values) v *= inv;
  }
}

namespace serial {

Objective logistic_objective(const LogisticProblem& problem, std::span<const double> w, double b,
                             double l2) {
  check_shapes(problem, w);
  const auto& X = problem.by_row;
  Objective out;
  out.grad_w.assign(X.cols, 0.0);
  double loss = 0.0;
  double gb = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    double z = b;
    for (std::size_t k = X.offsets[i]; k < X.offsets[i + 1]; ++k) z += w[X.indices[k]] * X.values[k];
    double r = 0.0;
    double li = 0.0;
    logistic_point(z, problem.labels[i], r, li);
    loss += li;
    gb += r;
    for (std::size_t k = X.offsets[i]; k < X.offsets[i + 1]; ++k)
      out.grad_w[X.indices[k]] += r * X.values[k];
  }
  const double inv_n = X.rows ? 1.0 / static_cast<double>(X.rows) : 0.0;
  double wnorm2 = 0.0;
  for (std::size_t j = 0; j < X.cols; ++j) {
    out.grad_w[j] = out.grad_w[j] * inv_n + l2 * w[j];
    wnorm2 += w[j] * w[j];
  }
  out.loss = loss * inv_n + 0.5 * l2 * wnorm2;
  out.grad_b = gb * inv_n;
  return out;
}

SparseMatrix hash_ngrams(std::span<const std::vector<std::string>> docs, std::uint32_t dims,
                         int ngram_min, int ngram_max) {
  SparseMatrix m;
  m.rows = docs.size();
  m.cols = dims;
  m.offsets.push_back(0);
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& doc : docs) {
    hash_ngram_row(doc, dims, ngram_min, ngram_max, idx, val);
    m.indices.insert(m.indices.end(), idx.begin(), idx.end());
    m.values.insert(m.values.end(), val.begin(), val.end());
    m.offsets.push_back(m.indices.size());
  }
  return m;
}

}  // namespace serial

namespace omp {

Objective logistic_objective(const LogisticProblem& problem, std::span<const double> w, double b,
                             double l2) {
  check_shapes(problem, w);
  const auto& X = problem.by_row;
  const auto& XT = problem.by_col;
  const auto n = static_cast<std::ptrdiff_t>(X.rows);
  const auto d = static_cast<std::ptrdiff_t>(X.cols);

  std::vector<double> residual(X.rows);
  std::vector<double> losses(X.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double z = b;
    for (std::size_t k = X.offsets[ui]; k < X.offsets[ui + 1]; ++k)
      z += w[X.indices[k]] * X.values[k];
    logistic_point(z, problem.labels[ui], residual[ui], losses[ui]);
  }

  const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
  Objective out;
  out.grad_w.assign(X.cols, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < d; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    double s = 0.0;
    for (std::size_t k = XT.offsets[uj]; k < XT.offsets[uj + 1]; ++k)
      s += residual[XT.indices[k]] * XT.values[k];
    out.grad_w[uj] = s * inv_n + l2 * w[uj];
  }

  const double loss = blocked_sum(n, [&](std::ptrdiff_t i) { return losses[static_cast<std::size_t>(i)]; });
  const double gb = blocked_sum(n, [&](std::ptrdiff_t i) { return residual[static_cast<std::size_t>(i)]; });
  const double wnorm2 = blocked_sum(d, [&](std::ptrdiff_t j) {
    const double v = w[static_cast<std::size_t>(j)];
    return v * v;
  });
  out.loss = loss * inv_n + 0.5 * l2 * wnorm2;
  out.grad_b = gb * inv_n;
  return out;
}

SparseMatrix hash_ngrams(std::span<const std::vector<std::string>> docs, std::uint32_t dims,
                         int ngram_min, int ngram_max) {
  const auto n = static_cast<std::ptrdiff_t>(docs.size());
  std::vector<std::vector<std::uint32_t>> idx(docs.size());
  std::vector<std::vector<double>> val(docs.size());
  std::string error;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      hash_ngram_row(docs[ui], dims, ngram_min, ngram_max, idx[ui], val[ui]);
    } catch (const std::exception& e) {
#pragma omp critical(hash_ngrams_error)
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw std::invalid_argument(error);

  SparseMatrix m;
  m.rows = docs.size();
  m.cols = dims;
  m.offsets.push_back(0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    m.indices.insert(m.indices.end(), idx[i].begin(), idx[i].end());
    m.values.insert(m.values.end(), val[i].begin(), val[i].end());
    m.offsets.push_back(m.indices.size());
  }
  return m;
}

}  // namespace omp

Objective logistic_objective(Backend backend, const LogisticProblem& problem,
                             std::span<const double> w, double b, double l2) {
  return backend == Backend::Serial ? serial::logistic_objective(problem, w, b, l2)
                                    : omp::logistic_objective(problem, w, b, l2);
}

SparseMatrix hash_ngrams(Backend backend, std::span<const std::vector<std::string>> docs,
                         std::uint32_t dims, int ngram_min, int ngram_max) {
  return backend == Backend::Serial ? serial::hash_ngrams(docs, dims, ngram_min, ngram_max)
                                    : omp::hash_ngrams(docs, dims, ngram_min, ngram_max);
}

}  // namespace kernels
}  // namespace polaudit
