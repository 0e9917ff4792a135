#include "polaudit/monoculture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "polaudit/errors.hpp"
#include "polaudit/hashing.hpp"

namespace polaudit {

std::string_view to_string(Ideology i) {
  return i == Ideology::Democrat ? "democrat" : "republican";
}

Ideology parse_ideology(std::string_view s) {
  if (s == "democrat") return Ideology::Democrat;
  if (s == "republican") return Ideology::Republican;
  throw ValidationError("unknown ideology \"" + std::string(s) + "\"");
}

MatrixMeans matrix_means(const SquareMatrix& m) {
  MatrixMeans out;
  const auto n = m.size();
  if (n == 0) return out;
  double all = 0.0;
  double off = 0.0;
  double diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      all += m.cells[i][j];
      (i == j ? diag : off) += m.cells[i][j];
    }
  }
  out.overall = all / static_cast<double>(n * n);
  out.diagonal = diag / static_cast<double>(n);
  out.off_diagonal = n > 1 ? off / static_cast<double>(n * (n - 1)) : 0.0;
  return out;
}

ConsistencyResult consistency_index(const std::map<std::string, BiasTable>& tables,
                                    Ideology ideology, bool include_diagonal) {
  if (tables.size() < 2) throw ValidationError("consistency index needs at least two models");
  const std::size_t n = tables.begin()->second.n;
  std::vector<std::set<std::string>> sets;
  ConsistencyResult result;
  auto& overlap = result.overlap;
  overlap.ideology = ideology;
  overlap.n = n;
  overlap.diagonal_included = include_diagonal;
  overlap.normalization_note =
      "cell = 100*|T_i & T_j|/N (per-pair normalization; a raw pairwise sum of intersection "
      "sizes would exceed 100 for N > 1)";
  for (const auto& [model, table] : tables) {
    if (table.n != n)
      throw ValidationError("bias tables disagree on N (" + std::to_string(table.n) + " vs " +
                            std::to_string(n) + ")");
    const auto& top = ideology == Ideology::Democrat ? table.top_dem : table.top_rep;
    if (top.empty()) throw MissingDataError("empty top-N token set for model " + model);
    overlap.matrix.labels.push_back(model);
    sets.emplace_back(top.begin(), top.end());
  }
  const auto m = sets.size();
  overlap.matrix.cells.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      std::size_t common = 0;
      for (const auto& t : sets[i]) common += sets[j].count(t);
      const double pct = 100.0 * static_cast<double>(common) / static_cast<double>(n);
      overlap.matrix.cells[i][j] = pct;
      overlap.matrix.cells[j][i] = pct;
    }
  }
  auto means = matrix_means(overlap.matrix);
  result.off_diagonal_mean = means.off_diagonal;
  result.overall_mean = include_diagonal ? means.overall : means.off_diagonal;
  return result;
}

BiasTable pool_bias_tables(std::span<const BiasTable> per_topic, std::size_t n) {
  if (per_topic.empty()) throw MissingDataError("no per-topic bias tables to pool");
  std::map<std::string, BiasEntry> pooled;
  for (const auto& table : per_topic) {
    for (const auto& e : table.entries) {
      auto [it, inserted] = pooled.try_emplace(e.token, e);
      if (inserted) continue;
      auto& p = it->second;
      if (std::fabs(e.score) > std::fabs(p.score)) p.score = e.score;
      p.count_dem += e.count_dem;
      p.count_rep += e.count_rep;
    }
  }
  BiasTable out;
  out.n = n;
  out.vocab_threshold = per_topic.front().vocab_threshold;
  out.entries.reserve(pooled.size());
  for (auto& [token, e] : pooled) out.entries.push_back(std::move(e));
  rank_top_tokens(out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Prepared {
  std::vector<FeatureVector> x;
  std::vector<std::uint8_t> y;
  std::vector<std::string> article_ids;
};

Prepared prepare(const ModelSummaries& m, const Featurizer& featurizer) {
  if (m.neutral.empty() || m.aligned.empty())
    throw MissingDataError("model " + m.model_id + " lacks neutral or aligned summaries");
  std::vector<SummaryRecord> records;
  Prepared p;
  for (const auto& r : m.neutral) {
    records.push_back(r);
    p.y.push_back(0);
  }
  for (const auto& r : m.aligned) {
    records.push_back(r);
    p.y.push_back(1);
  }
  // Key order, as in diff().
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].key() < records[b].key();
  });
  std::vector<SummaryRecord> sorted;
  std::vector<std::uint8_t> labels;
  for (auto i : order) {
    sorted.push_back(records[i]);
    labels.push_back(p.y[i]);
    p.article_ids.push_back(records[i].article_id);
  }
  p.y = std::move(labels);
  p.x = featurizer.featurize(sorted);
  return p;
}

}  // namespace

TransferMatrix transfer_matrix(std::span<const ModelSummaries> models, Contrast contrast,
                               const Featurizer& featurizer, std::uint64_t seed,
                               const TrainingOptions& training) {
  if (models.empty()) throw MissingDataError("transfer matrix needs at least one model");
  std::vector<Prepared> data;
  for (const auto& m : models) data.push_back(prepare(m, featurizer));
  const auto dims = data.front().x.front().dims;
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (data[s].x.front().dims != dims)
      throw ValidationError("feature-space mismatch for model " + models[s].model_id);
  }

  const auto k = models.size();
  TransferMatrix out;
  out.contrast = contrast;
  for (const auto& m : models) out.matrix.labels.push_back(m.model_id);
  out.matrix.cells.assign(k, std::vector<double>(k, 0.0));

  DiffOptions diff_options;
  diff_options.training = training;
  for (std::size_t s = 0; s < k; ++s) {
    out.matrix.cells[s][s] =
        diff_vectors(data[s].x, data[s].y, data[s].article_ids, seed, diff_options).mean_accuracy;
    if (k == 1) break;
    auto model = LinearClassifier::train(data[s].x, data[s].y, training);
    for (std::size_t t = 0; t < k; ++t) {
      if (t == s) continue;
      std::vector<std::size_t> all(data[t].x.size());
      std::iota(all.begin(), all.end(), 0);
      auto subset = balanced_subset(data[t].y, all, mix_seed(seed, 1000 + t));
      if (subset.empty()) throw MissingDataError("model " + models[t].model_id + " has one class");
      std::vector<FeatureVector> tx;
      std::vector<std::uint8_t> ty;
      for (auto i : subset) {
        tx.push_back(data[t].x[i]);
        ty.push_back(data[t].y[i]);
      }
      out.matrix.cells[s][t] = accuracy(model, tx, ty);
    }
  }
  auto means = matrix_means(out.matrix);
  out.diagonal_mean = means.diagonal;
  out.off_diagonal_mean = means.off_diagonal;
  return out;
}

}  // namespace polaudit
