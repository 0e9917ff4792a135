#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polaudit/features.hpp"
#include "polaudit/kernels.hpp"

namespace polaudit {

struct TrainingOptions {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int max_epochs = 500;
  double tolerance = 1e-6;  // stop once the gradient norm falls below this
  std::uint64_t seed = 0;
  kernels::Backend backend = kernels::Backend::OpenMP;
};

struct TrainingMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  bool converged = false;
};

// Binary logistic regression fitted by full-batch gradient descent from a
// zero start. Training touches only the feature columns that occur in the
// training set; the others keep weight zero, exactly as in a full-width run.
class LinearClassifier {
 public:
  static LinearClassifier train(std::span<const FeatureVector> x,
                                std::span<const std::uint8_t> labels,
                                const TrainingOptions& options = {});

  double decision(const FeatureVector& x) const;
  std::uint8_t predict(const FeatureVector& x) const { return decision(x) > 0.0 ? 1 : 0; }

  std::uint32_t dims() const { return dims_; }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const TrainingMeta& meta() const { return meta_; }

 private:
  std::uint32_t dims_ = 0;
  std::vector<double> weights_;
  double bias_ = 0.0;
  TrainingMeta meta_;
};

// Fraction of correct predictions. A decision value of exactly zero counts as
// half correct, which keeps accuracy invariant under swapping the labels.
double accuracy(const LinearClassifier& model, std::span<const FeatureVector> x,
                std::span<const std::uint8_t> labels);

// Training-set objective over a compacted problem, for gradient checks.
LogisticProblem make_problem(std::span<const FeatureVector> x,
                             std::span<const std::uint8_t> labels,
                             std::vector<std::uint32_t>* active_columns = nullptr);

}  // namespace polaudit
