#include "polaudit/features.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "polaudit/errors.hpp"

namespace polaudit {

double FeatureVector::dot(std::span<const double> weights) const {
  double s = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < weights.size()) s += weights[indices[k]] * values[k];
  }
  return s;
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (b.indices[j] < a.indices[i]) {
      ++j;
    } else {
      s += a.values[i++] * b.values[j++];
    }
  }
  const double na = a.norm();
  const double nb = b.norm();
  return (na > 0 && nb > 0) ? s / (na * nb) : 0.0;
}

// ---------------------------------------------------------------------------

HashedNgramFeaturizer::HashedNgramFeaturizer(std::uint32_t dims, int ngram_min, int ngram_max,
                                             Tokenizer tokenizer, kernels::Backend backend)
    : dims_(dims),
      ngram_min_(ngram_min),
      ngram_max_(ngram_max),
      tokenizer_(std::move(tokenizer)),
      backend_(backend) {
  if (dims_ == 0 || (dims_ & (dims_ - 1)) != 0)
    throw ValidationError("hashed feature dims must be a power of two");
  if (ngram_min_ < 1 || ngram_max_ < ngram_min_) throw ValidationError("invalid n-gram range");
}

FeatureVector HashedNgramFeaturizer::featurize_text(std::string_view text) const {
  auto tokens = tokenizer_.tokenize(text);
  if (tokens.empty()) throw ValidationError("cannot featurize zero-length text");
  FeatureVector fv;
  fv.dims = dims_;
  kernels::hash_ngram_row(tokens, dims_, ngram_min_, ngram_max_, fv.indices, fv.values);
  return fv;
}

std::vector<FeatureVector> HashedNgramFeaturizer::featurize(
    std::span<const SummaryRecord> records) const {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(records.size());
  for (const auto& r : records) {
    docs.push_back(tokenizer_.tokenize(r.text));
    if (docs.back().empty())
      throw ValidationError("cannot featurize zero-length text (" + r.article_id + ", " +
                            r.model_id + ", " + std::string(to_string(r.alignment)) + ")");
  }
  auto m = kernels::hash_ngrams(backend_, docs, dims_, ngram_min_, ngram_max_);
  std::vector<FeatureVector> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto& fv = out[i];
    fv.dims = dims_;
    fv.indices.assign(m.indices.begin() + static_cast<std::ptrdiff_t>(m.offsets[i]),
                      m.indices.begin() + static_cast<std::ptrdiff_t>(m.offsets[i + 1]));
    fv.values.assign(m.values.begin() + static_cast<std::ptrdiff_t>(m.offsets[i]),
                     m.values.begin() + static_cast<std::ptrdiff_t>(m.offsets[i + 1]));
  }
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingFeaturizer::EmbeddingFeaturizer(std::map<SummaryKey, std::vector<double>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) throw MissingDataError("embedding table is empty");
  dims_ = static_cast<std::uint32_t>(rows_.begin()->second.size());
  if (dims_ == 0) throw ValidationError("embedding vectors are empty");
  for (const auto& [key, v] : rows_) {
    if (v.size() != dims_)
      throw ValidationError("embedding for (" + key.article_id + ", " + key.model_id +
                            ") has " + std::to_string(v.size()) + " dims, expected " +
                            std::to_string(dims_));
  }
}

EmbeddingFeaturizer EmbeddingFeaturizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings file " + path.string());
  std::map<SummaryKey, std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = path.string() + ":" + std::to_string(lineno) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
      SummaryKey key{obj.at("article_id").get<std::string>(), obj.at("model_id").get<std::string>(),
                     parse_alignment(obj.at("alignment").get<std::string>())};
      auto vec = obj.at("vector").get<std::vector<double>>();
      if (!rows.emplace(std::move(key), std::move(vec)).second)
        throw ValidationError("duplicate embedding row");
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return EmbeddingFeaturizer(std::move(rows));
}

std::vector<FeatureVector> EmbeddingFeaturizer::featurize(
    std::span<const SummaryRecord> records) const {
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = rows_.find(r.key());
    if (it == rows_.end())
      throw MissingDataError("no embedding row for (" + r.article_id + ", " + r.model_id + ", " +
                             std::string(to_string(r.alignment)) + ")");
    FeatureVector fv;
    fv.dims = dims_;
    fv.source = FeatureSource::ExternalEmbedding;
    fv.indices.resize(dims_);
    for (std::uint32_t j = 0; j < dims_; ++j) fv.indices[j] = j;
    fv.values = it->second;
    out.push_back(std::move(fv));
  }
  return out;
}

std::vector<LabeledVector> featurize(std::span<const SummaryRecord> records,
                                     const Featurizer& featurizer) {
  auto vectors = featurizer.featurize(records);
  std::vector<LabeledVector> out;
  out.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out.push_back({std::move(vectors[i]),
                   static_cast<std::uint8_t>(records[i].alignment == Alignment::Neutral ? 0 : 1)});
  }
  return out;
}

}  // namespace polaudit
