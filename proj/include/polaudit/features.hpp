#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polaudit/corpus.hpp"
#include "polaudit/kernels.hpp"
#include "polaudit/lexicon.hpp"

namespace polaudit {

enum class FeatureSource { HashedNgrams, ExternalEmbedding };

// Sparse feature vector; indices sorted and unique. Dense embeddings carry
// every index.
struct FeatureVector {
  std::uint32_t dims = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  FeatureSource source = FeatureSource::HashedNgrams;

  double dot(std::span<const double> weights) const;
  double norm() const;
};

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

class Featurizer {
 public:
  virtual ~Featurizer() = default;

  virtual std::uint32_t dims() const = 0;
  virtual FeatureSource source() const = 0;
  // Throws ValidationError for zero-length text, MissingDataError for a
  // record the featurizer has no data for.
  virtual std::vector<FeatureVector> featurize(std::span<const SummaryRecord> records) const = 0;
};

// L2-normalized term frequencies of hashed word n-grams.
class HashedNgramFeaturizer final : public Featurizer {
 public:
  static constexpr std::uint32_t kDefaultDims = 1u << 18;

  // Stopwords are kept by default: function words are legitimate signal for
  // telling two text sources apart.
  explicit HashedNgramFeaturizer(std::uint32_t dims = kDefaultDims, int ngram_min = 1,
                                 int ngram_max = 2, Tokenizer tokenizer = Tokenizer({}, false),
                                 kernels::Backend backend = kernels::Backend::OpenMP);

  std::uint32_t dims() const override { return dims_; }
  FeatureSource source() const override { return FeatureSource::HashedNgrams; }
  std::vector<FeatureVector> featurize(std::span<const SummaryRecord> records) const override;

  FeatureVector featurize_text(std::string_view text) const;

 private:
  std::uint32_t dims_;
  int ngram_min_;
  int ngram_max_;
  Tokenizer tokenizer_;
  kernels::Backend backend_;
};

// Precomputed sentence embeddings keyed by (article_id, model_id, alignment),
// read from JSONL rows {"article_id", "model_id", "alignment", "vector": [...]}.
class EmbeddingFeaturizer final : public Featurizer {
 public:
  static EmbeddingFeaturizer load(const std::filesystem::path& path);
  explicit EmbeddingFeaturizer(std::map<SummaryKey, std::vector<double>> rows);

  std::uint32_t dims() const override { return dims_; }
  FeatureSource source() const override { return FeatureSource::ExternalEmbedding; }
  std::vector<FeatureVector> featurize(std::span<const SummaryRecord> records) const override;

 private:
  std::map<SummaryKey, std::vector<double>> rows_;
  std::uint32_t dims_ = 0;
};

struct LabeledVector {
  FeatureVector features;
  std::uint8_t label = 0;  // 0 = neutral, 1 = aligned
};

// One vector per record; neutral records get label 0, all others 1.
std::vector<LabeledVector> featurize(std::span<const SummaryRecord> records,
                                     const Featurizer& featurizer);

}  // namespace polaudit
