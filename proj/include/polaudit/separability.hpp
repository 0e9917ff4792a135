#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polaudit/classifier.hpp"
#include "polaudit/corpus.hpp"
#include "polaudit/features.hpp"

namespace polaudit {

enum class Contrast { NeutralVsDemocrat, NeutralVsRepublican };

std::string_view to_string(Contrast c);
Contrast parse_contrast(std::string_view s);  // "democrat" | "republican" (or the full names)
Alignment aligned_side(Contrast c);

struct SeparabilityResult {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  std::size_t n_neutral = 0;
  std::size_t n_aligned = 0;
  std::optional<Contrast> contrast;
  std::string topic;
  std::string model_id;
  std::uint64_t seed = 0;
};

struct DiffOptions {
  std::size_t folds = 5;
  TrainingOptions training;
  std::string topic;  // copied into the result
};

// Cross-validated accuracy of a classifier separating `neutral` (label 0)
// from `aligned` (label 1). Folds are assigned per article id by a seeded
// shuffle, so all summaries of one article land in the same fold. Each test
// fold is balanced by seeded downsampling of its majority class.
SeparabilityResult diff(std::span<const SummaryRecord> neutral,
                        std::span<const SummaryRecord> aligned, const Featurizer& featurizer,
                        std::uint64_t seed, const DiffOptions& options = {});

// Same protocol on already featurized examples. `article_ids[i]` groups
// examples for fold assignment.
SeparabilityResult diff_vectors(std::span<const FeatureVector> x,
                                std::span<const std::uint8_t> labels,
                                std::span<const std::string> article_ids, std::uint64_t seed,
                                const DiffOptions& options = {});

// Seeded subset of indices with equal class counts (majority downsampled);
// returned indices are in ascending order.
std::vector<std::size_t> balanced_subset(std::span<const std::uint8_t> labels,
                                         std::span<const std::size_t> candidates,
                                         std::uint64_t seed);

// Polarization index in percentage points: 100 * (dem - rep). Negative values
// mean the neutral summaries sit closer to the Democrat-aligned ones.
double polarization(const SeparabilityResult& diff_dem, const SeparabilityResult& diff_rep);

struct PolarizationReport {
  std::vector<std::string> topics;  // rows
  std::vector<std::string> models;  // columns
  std::vector<std::vector<std::optional<double>>> cells;  // [topic][model], percentage points
  std::vector<double> topic_means;
  std::vector<double> topic_max_magnitude;  // signed value of the largest |P| in the row
  std::vector<double> model_means;
  double grand_mean = 0.0;
  // Row index of the largest |P| per model column, and for the topic-mean column.
  std::vector<std::size_t> column_extreme_row;
  std::size_t mean_column_extreme_row = 0;
  std::vector<std::pair<std::string, std::string>> missing;  // (topic, model)
};

// Derives row/column statistics from a grid. Missing cells throw
// MissingDataError listing them unless allow_missing is set, in which case
// the statistics use the present cells only.
PolarizationReport polarization_report(std::vector<std::string> topics,
                                       std::vector<std::string> models,
                                       std::vector<std::vector<std::optional<double>>> cells,
                                       bool allow_missing = false);

// Pairs neutral-vs-democrat with neutral-vs-republican results by
// (topic, model_id) and builds the grid in first-seen order of topics/models.
PolarizationReport polarization_report(std::span<const SeparabilityResult> results,
                                       bool allow_missing = false);

// Recomputes the per-topic mean and max-magnitude from the grid and compares
// them with the stored values.
bool summary_consistent(const PolarizationReport& report, double tolerance = 1e-9);

}  // namespace polaudit
