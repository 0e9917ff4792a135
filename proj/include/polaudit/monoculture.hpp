#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polaudit/classifier.hpp"
#include "polaudit/features.hpp"
#include "polaudit/lexicon.hpp"
#include "polaudit/separability.hpp"

namespace polaudit {

enum class Ideology { Democrat, Republican };

std::string_view to_string(Ideology i);
Ideology parse_ideology(std::string_view s);

// Square matrix with shared row/column labels.
struct SquareMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> cells;

  std::size_t size() const { return labels.size(); }
};

struct MatrixMeans {
  double overall = 0.0;       // every cell, diagonal included
  double off_diagonal = 0.0;  // cells (i, j) with i != j
  double diagonal = 0.0;
};

MatrixMeans matrix_means(const SquareMatrix& m);

struct OverlapMatrix {
  Ideology ideology = Ideology::Democrat;
  SquareMatrix matrix;  // percentages in [0, 100]
  std::size_t n = 0;
  bool diagonal_included = true;
  // The pairwise sum of raw intersection sizes cannot produce percentages
  // capped at 100, so cells are normalized per pair by N. Carried into
  // output metadata.
  std::string normalization_note;
};

struct ConsistencyResult {
  OverlapMatrix overlap;
  double overall_mean = 0.0;  // includes (i, i) cells unless include_diagonal is false
  double off_diagonal_mean = 0.0;
};

// cell(i, j) = 100 * |T_i ∩ T_j| / N, where T is each model's top-N list for
// the given ideology. All tables must share N. Needs at least two models.
ConsistencyResult consistency_index(const std::map<std::string, BiasTable>& tables,
                                    Ideology ideology, bool include_diagonal = true);

// Pools per-topic bias tables of one model: each token keeps its
// largest-magnitude score across topics (counts are summed), then the top-N
// lists are re-ranked.
BiasTable pool_bias_tables(std::span<const BiasTable> per_topic, std::size_t n);

struct ModelSummaries {
  std::string model_id;
  std::vector<SummaryRecord> neutral;
  std::vector<SummaryRecord> aligned;
};

struct TransferMatrix {
  Contrast contrast = Contrast::NeutralVsDemocrat;
  SquareMatrix matrix;  // rows = source, columns = target; accuracies in [0, 1]
  double diagonal_mean = 0.0;
  double off_diagonal_mean = 0.0;
};

// Diagonal cells are each model's own cross-validated diff accuracy.
// Off-diagonal cell (s, t): a classifier trained on all of s's data,
// evaluated on t's full set balanced by seeded downsampling.
TransferMatrix transfer_matrix(std::span<const ModelSummaries> models, Contrast contrast,
                               const Featurizer& featurizer, std::uint64_t seed,
                               const TrainingOptions& training = {});

}  // namespace polaudit
