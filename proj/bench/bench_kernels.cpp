// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include <random>

#include "polaudit/classifier.hpp"
#include "polaudit/kernels.hpp"
#include "polaudit/synth.hpp"

using namespace polaudit;

namespace {

std::vector<std::vector<std::string>> token_docs(std::size_t n, std::size_t len) {
  std::mt19937_64 rng(1);
  auto vocab = numbered_tokens("w", 5000);
  std::vector<std::vector<std::string>> docs(n);
  for (auto& d : docs)
    for (std::size_t i = 0; i < len; ++i) d.push_back(vocab[rng() % vocab.size()]);
  return docs;
}

const LogisticProblem& problem() {
  static const LogisticProblem p = [] {
    auto docs = token_docs(4000, 60);
    auto rows = kernels::serial::hash_ngrams(docs, 1u << 18, 1, 2);
    std::vector<std::uint8_t> labels(rows.rows);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
    return LogisticProblem(std::move(rows), std::move(labels));
  }();
  return p;
}

void objective(benchmark::State& state, kernels::Backend backend) {
  const auto& p = problem();
  std::vector<double> w(p.dims(), 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::logistic_objective(backend, p, w, 0.1, 1e-4));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.by_row.nnz()));
}

void hashing(benchmark::State& state, kernels::Backend backend) {
  static const auto docs = token_docs(2000, 80);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::hash_ngrams(backend, docs, 1u << 18, 1, 2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs.size()));
}

}  // namespace

BENCHMARK_CAPTURE(objective, serial, kernels::Backend::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(objective, openmp, kernels::Backend::OpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hashing, serial, kernels::Backend::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hashing, openmp, kernels::Backend::OpenMP)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
