#include "polaudit/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "polaudit/errors.hpp"

namespace polaudit {

LogisticProblem make_problem(std::span<const FeatureVector> x,
                             std::span<const std::uint8_t> labels,
                             std::vector<std::uint32_t>* active_columns) {
  if (x.size() != labels.size()) throw ValidationError("feature/label count mismatch");
  std::vector<std::uint32_t> active;
  for (const auto& fv : x) active.insert(active.end(), fv.indices.begin(), fv.indices.end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());

  SparseMatrix m;
  m.rows = x.size();
  m.cols = active.size();
  m.offsets.reserve(x.size() + 1);
  m.offsets.push_back(0);
  for (const auto& fv : x) {
    for (std::size_t k = 0; k < fv.indices.size(); ++k) {
      auto pos = std::lower_bound(active.begin(), active.end(), fv.indices[k]) - active.begin();
      m.indices.push_back(static_cast<std::uint32_t>(pos));
      m.values.push_back(fv.values[k]);
    }
    m.offsets.push_back(m.indices.size());
  }
  if (active_columns) *active_columns = std::move(active);
  return LogisticProblem(std::move(m), {labels.begin(), labels.end()});
}

LinearClassifier LinearClassifier::train(std::span<const FeatureVector> x,
                                         std::span<const std::uint8_t> labels,
                                         const TrainingOptions& options) {
  if (x.empty()) throw MissingDataError("no training examples");
  const auto dims = x.front().dims;
  for (const auto& fv : x) {
    if (fv.dims != dims) throw ValidationError("feature-space mismatch in training data");
  }
  std::vector<std::uint32_t> active;
  auto problem = make_problem(x, labels, &active);

  const auto k = static_cast<std::ptrdiff_t>(problem.dims());
  std::vector<double> w(problem.dims(), 0.0);
  double b = 0.0;
  LinearClassifier model;
  model.meta_.learning_rate = options.learning_rate;
  model.meta_.l2 = options.l2;
  model.meta_.seed = options.seed;

  for (int epoch = 0; epoch <= options.max_epochs; ++epoch) {
    auto obj = kernels::logistic_objective(options.backend, problem, w, b, options.l2);
    double g2 = obj.grad_b * obj.grad_b;
    for (double g : obj.grad_w) g2 += g * g;
    model.meta_.final_loss = obj.loss;
    model.meta_.final_grad_norm = std::sqrt(g2);
    model.meta_.epochs = epoch;
    if (model.meta_.final_grad_norm < options.tolerance) {
      model.meta_.converged = true;
      break;
    }
    if (epoch == options.max_epochs) break;
#pragma omp parallel for schedule(static) if (options.backend == kernels::Backend::OpenMP)
    for (std::ptrdiff_t j = 0; j < k; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      w[uj] -= options.learning_rate * obj.grad_w[uj];
    }
    b -= options.learning_rate * obj.grad_b;
  }

  model.dims_ = dims;
  model.weights_.assign(dims, 0.0);
  for (std::size_t j = 0; j < active.size(); ++j) model.weights_[active[j]] = w[j];
  model.bias_ = b;
  return model;
}

double LinearClassifier::decision(const FeatureVector& x) const {
  if (x.dims != dims_) throw ValidationError("feature-space mismatch between model and input");
  return x.dot(weights_) + bias_;
}

double accuracy(const LinearClassifier& model, std::span<const FeatureVector> x,
                std::span<const std::uint8_t> labels) {
  if (x.empty()) throw MissingDataError("no evaluation examples");
  double correct = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = model.decision(x[i]);
    if (z == 0.0) {
      correct += 0.5;
    } else if ((z > 0.0) == (labels[i] == 1)) {
      correct += 1.0;
    }
  }
  return correct / static_cast<double>(x.size());
}

}  // namespace polaudit
