#include "polaudit/separability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "polaudit/errors.hpp"
#include "polaudit/hashing.hpp"

namespace polaudit {

namespace {

// Fisher-Yates over mt19937_64; spelled out so the permutation does not
// depend on the standard library's shuffle implementation.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::string uniform_model(std::span<const SummaryRecord> a, std::span<const SummaryRecord> b) {
  std::set<std::string> ids;
  for (const auto& r : a) ids.insert(r.model_id);
  for (const auto& r : b) ids.insert(r.model_id);
  if (ids.size() == 1) return *ids.begin();
  return "pooled";
}

}  // namespace

std::string_view to_string(Contrast c) {
  return c == Contrast::NeutralVsDemocrat ? "neutral_vs_democrat" : "neutral_vs_republican";
}

Contrast parse_contrast(std::string_view s) {
  if (s == "democrat" || s == "neutral_vs_democrat") return Contrast::NeutralVsDemocrat;
  if (s == "republican" || s == "neutral_vs_republican") return Contrast::NeutralVsRepublican;
  throw ValidationError("unknown contrast \"" + std::string(s) + "\"");
}

Alignment aligned_side(Contrast c) {
  return c == Contrast::NeutralVsDemocrat ? Alignment::Democrat : Alignment::Republican;
}

std::vector<std::size_t> balanced_subset(std::span<const std::uint8_t> labels,
                                         std::span<const std::size_t> candidates,
                                         std::uint64_t seed) {
  std::vector<std::size_t> zero;
  std::vector<std::size_t> one;
  for (auto i : candidates) (labels[i] ? one : zero).push_back(i);
  auto& major = zero.size() > one.size() ? zero : one;
  const auto keep = std::min(zero.size(), one.size());
  if (major.size() > keep) {
    seeded_shuffle(major, seed);
    major.resize(keep);
  }
  std::vector<std::size_t> out;
  out.reserve(2 * keep);
  out.insert(out.end(), zero.begin(), zero.end());
  out.insert(out.end(), one.begin(), one.end());
  std::sort(out.begin(), out.end());
  return out;
}

SeparabilityResult diff_vectors(std::span<const FeatureVector> x,
                                std::span<const std::uint8_t> labels,
                                std::span<const std::string> article_ids, std::uint64_t seed,
                                const DiffOptions& options) {
  const std::size_t k = options.folds;
  if (k < 2) throw ValidationError("need at least 2 folds");
  if (x.size() != labels.size() || x.size() != article_ids.size())
    throw ValidationError("features, labels and article ids differ in length");

  std::vector<std::string> articles(article_ids.begin(), article_ids.end());
  std::sort(articles.begin(), articles.end());
  articles.erase(std::unique(articles.begin(), articles.end()), articles.end());
  if (articles.size() < k)
    throw ValidationError("need at least " + std::to_string(k) + " distinct article ids, got " +
                          std::to_string(articles.size()));
  seeded_shuffle(articles, seed);
  std::map<std::string_view, std::size_t> fold_of;
  for (std::size_t i = 0; i < articles.size(); ++i) fold_of[articles[i]] = i % k;

  std::vector<std::vector<std::size_t>> fold_members(k);
  for (std::size_t i = 0; i < x.size(); ++i) fold_members[fold_of[article_ids[i]]].push_back(i);

  SeparabilityResult result;
  result.seed = seed;
  result.topic = options.topic;
  for (auto y : labels) (y ? result.n_aligned : result.n_neutral) += 1;
  result.fold_accuracies.assign(k, 0.0);

  std::vector<std::string> errors(k);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t sf = 0; sf < static_cast<std::ptrdiff_t>(k); ++sf) {
    const auto f = static_cast<std::size_t>(sf);
    try {
      auto test = balanced_subset(labels, fold_members[f], mix_seed(seed, f + 1));
      if (test.empty()) throw ValidationError("degenerate single-class fold " + std::to_string(f));

      std::vector<FeatureVector> train_x;
      std::vector<std::uint8_t> train_y;
      for (std::size_t g = 0; g < k; ++g) {
        if (g == f) continue;
        for (auto i : fold_members[g]) {
          train_x.push_back(x[i]);
          train_y.push_back(labels[i]);
        }
      }
      const auto positives = std::count(train_y.begin(), train_y.end(), 1);
      if (positives == 0 || positives == static_cast<std::ptrdiff_t>(train_y.size()))
        throw ValidationError("degenerate single-class training split for fold " +
                              std::to_string(f));
      auto model = LinearClassifier::train(train_x, train_y, options.training);

      std::vector<FeatureVector> test_x;
      std::vector<std::uint8_t> test_y;
      for (auto i : test) {
        test_x.push_back(x[i]);
        test_y.push_back(labels[i]);
      }
      result.fold_accuracies[f] = accuracy(model, test_x, test_y);
    } catch (const std::exception& e) {
      errors[f] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ValidationError(e);
  }
  result.mean_accuracy =
      std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
      static_cast<double>(k);
  return result;
}

SeparabilityResult diff(std::span<const SummaryRecord> neutral,
                        std::span<const SummaryRecord> aligned, const Featurizer& featurizer,
                        std::uint64_t seed, const DiffOptions& options) {
  if (neutral.empty() || aligned.empty())
    throw MissingDataError("diff needs non-empty neutral and aligned sets");

  // Order examples by record key, not by side, so that swapping the two
  // arguments yields the same sample order.
  struct Item {
    const SummaryRecord* record;
    std::uint8_t label;
  };
  std::vector<Item> items;
  items.reserve(neutral.size() + aligned.size());
  for (const auto& r : neutral) items.push_back({&r, 0});
  for (const auto& r : aligned) items.push_back({&r, 1});
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.record->key() < b.record->key();
  });

  std::vector<SummaryRecord> records;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> article_ids;
  records.reserve(items.size());
  for (const auto& it : items) {
    records.push_back(*it.record);
    labels.push_back(it.label);
    article_ids.push_back(it.record->article_id);
  }
  auto x = featurizer.featurize(records);
  auto result = diff_vectors(x, labels, article_ids, seed, options);

  std::set<Alignment> sides;
  for (const auto& r : aligned) sides.insert(r.alignment);
  if (sides.size() == 1 && *sides.begin() == Alignment::Democrat)
    result.contrast = Contrast::NeutralVsDemocrat;
  else if (sides.size() == 1 && *sides.begin() == Alignment::Republican)
    result.contrast = Contrast::NeutralVsRepublican;
  result.model_id = uniform_model(neutral, aligned);
  return result;
}

double polarization(const SeparabilityResult& diff_dem, const SeparabilityResult& diff_rep) {
  if (diff_dem.topic != diff_rep.topic || diff_dem.model_id != diff_rep.model_id)
    throw ValidationError("polarization needs results for the same topic and model (got " +
                          diff_dem.topic + "/" + diff_dem.model_id + " vs " + diff_rep.topic +
                          "/" + diff_rep.model_id + ")");
  return 100.0 * (diff_dem.mean_accuracy - diff_rep.mean_accuracy);
}

// ---------------------------------------------------------------------------

namespace {

struct Reduction {
  double mean = 0.0;
  double extreme = 0.0;
  std::size_t extreme_index = 0;
};

Reduction reduce(const std::vector<std::optional<double>>& values) {
  Reduction r;
  std::size_t n = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    r.mean += *values[i];
    ++n;
    if (std::fabs(*values[i]) > best) {
      best = std::fabs(*values[i]);
      r.extreme = *values[i];
      r.extreme_index = i;
    }
  }
  if (n) r.mean /= static_cast<double>(n);
  return r;
}

}  // namespace

PolarizationReport polarization_report(std::vector<std::string> topics,
                                       std::vector<std::string> models,
                                       std::vector<std::vector<std::optional<double>>> cells,
                                       bool allow_missing) {
  if (cells.size() != topics.size()) throw ValidationError("grid rows do not match topics");
  for (const auto& row : cells) {
    if (row.size() != models.size()) throw ValidationError("grid columns do not match models");
  }
  PolarizationReport rep;
  rep.topics = std::move(topics);
  rep.models = std::move(models);
  rep.cells = std::move(cells);

  for (std::size_t t = 0; t < rep.topics.size(); ++t)
    for (std::size_t m = 0; m < rep.models.size(); ++m)
      if (!rep.cells[t][m]) rep.missing.emplace_back(rep.topics[t], rep.models[m]);
  if (!rep.missing.empty() && !allow_missing) {
    std::string msg = "polarization grid is missing cells:";
    for (const auto& [t, m] : rep.missing) msg += " (" + t + ", " + m + ")";
    throw MissingDataError(msg);
  }

  std::vector<std::optional<double>> mean_column;
  double grand = 0.0;
  std::size_t present = 0;
  for (const auto& row : rep.cells) {
    auto r = reduce(row);
    rep.topic_means.push_back(r.mean);
    rep.topic_max_magnitude.push_back(r.extreme);
    mean_column.emplace_back(r.mean);
    for (const auto& c : row) {
      if (c) {
        grand += *c;
        ++present;
      }
    }
  }
  rep.grand_mean = present ? grand / static_cast<double>(present) : 0.0;

  for (std::size_t m = 0; m < rep.models.size(); ++m) {
    std::vector<std::optional<double>> column;
    for (const auto& row : rep.cells) column.push_back(row[m]);
    auto r = reduce(column);
    rep.model_means.push_back(r.mean);
    rep.column_extreme_row.push_back(r.extreme_index);
  }
  rep.mean_column_extreme_row = reduce(mean_column).extreme_index;
  return rep;
}

PolarizationReport polarization_report(std::span<const SeparabilityResult> results,
                                       bool allow_missing) {
  std::vector<std::string> topics;
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, const SeparabilityResult*> dem;
  std::map<std::pair<std::string, std::string>, const SeparabilityResult*> rep;
  for (const auto& r : results) {
    if (!r.contrast) throw ValidationError("separability result without a contrast");
    if (std::find(topics.begin(), topics.end(), r.topic) == topics.end()) topics.push_back(r.topic);
    if (std::find(models.begin(), models.end(), r.model_id) == models.end())
      models.push_back(r.model_id);
    auto& slot = *r.contrast == Contrast::NeutralVsDemocrat ? dem : rep;
    slot[{r.topic, r.model_id}] = &r;
  }
  std::vector<std::vector<std::optional<double>>> cells(
      topics.size(), std::vector<std::optional<double>>(models.size()));
  for (std::size_t t = 0; t < topics.size(); ++t) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      auto d = dem.find({topics[t], models[m]});
      auto r = rep.find({topics[t], models[m]});
      if (d != dem.end() && r != rep.end()) cells[t][m] = polarization(*d->second, *r->second);
    }
  }
  return polarization_report(std::move(topics), std::move(models), std::move(cells),
                             allow_missing);
}

bool summary_consistent(const PolarizationReport& report, double tolerance) {
  if (report.topic_means.size() != report.cells.size() ||
      report.topic_max_magnitude.size() != report.cells.size())
    return false;
  for (std::size_t t = 0; t < report.cells.size(); ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    double extreme = 0.0;
    double best = -1.0;
    for (const auto& c : report.cells[t]) {
      if (!c) continue;
      sum += *c;
      ++n;
      if (std::fabs(*c) > best) {
        best = std::fabs(*c);
        extreme = *c;
      }
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    if (std::fabs(mean - report.topic_means[t]) > tolerance) return false;
    if (std::fabs(extreme - report.topic_max_magnitude[t]) > tolerance) return false;
  }
  return true;
}

}  // namespace polaudit
