#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "polaudit/errors.hpp"
#include "polaudit/hashing.hpp"
#include "polaudit/report.hpp"

namespace polaudit {

namespace {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  void write(const std::string& name, const std::string& kind, const std::string& contents) {
    std::ofstream out(root_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (root_ / name).string());
    out << contents;
    entries_.push_back({name, kind, sha256_hex(contents)});
  }

  std::vector<ManifestEntry> take() { return std::move(entries_); }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
};

bool wants(const AuditRunConfig& c, std::string_view format) {
  return std::find(c.formats.begin(), c.formats.end(), format) != c.formats.end();
}

std::unique_ptr<Featurizer> make_featurizer(const AuditRunConfig& c) {
  if (c.featurizer == "hashed") return std::make_unique<HashedNgramFeaturizer>(c.hashed_dims);
  if (c.featurizer == "embeddings") {
    if (!c.embeddings_file) throw ValidationError("featurizer \"embeddings\" needs embeddings_file");
    return std::make_unique<EmbeddingFeaturizer>(EmbeddingFeaturizer::load(*c.embeddings_file));
  }
  throw ValidationError("unknown featurizer \"" + c.featurizer + "\"");
}

Tokenizer make_tokenizer(const AuditRunConfig& c) {
  if (c.stopwords_file) return Tokenizer::from_stopword_file(*c.stopwords_file, c.stem);
  return Tokenizer(std::unordered_set<std::string>(default_stopwords().begin(),
                                                   default_stopwords().end()),
                   c.stem);
}

}  // namespace

std::string file_stem(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

AuditRunConfig audit_config_from_json(const nlohmann::json& j) {
  AuditRunConfig c;
  try {
    if (!j.is_object()) throw ValidationError("audit config must be a JSON object");
    if (j.contains("workspace")) c.workspace = j.at("workspace").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("topics")) c.topics = j.at("topics").get<std::vector<std::string>>();
    if (j.contains("models")) c.models = j.at("models").get<std::vector<std::string>>();
    c.n = j.value("n", c.n);
    c.vocab_threshold = j.value("vocab_threshold", c.vocab_threshold);
    c.featurizer = j.value("featurizer", c.featurizer);
    if (j.contains("embeddings_file") && !j.at("embeddings_file").is_null())
      c.embeddings_file = j.at("embeddings_file").get<std::string>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("formats")) c.formats = j.at("formats").get<std::vector<std::string>>();
    if (j.contains("stopwords_file") && !j.at("stopwords_file").is_null())
      c.stopwords_file = j.at("stopwords_file").get<std::string>();
    c.stem = j.value("stem", c.stem);
    c.hashed_dims = j.value("hashed_dims", c.hashed_dims);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("audit config: ") + e.what());
  }
  if (c.n < 1) throw ValidationError("audit config: n must be at least 1");
  for (const auto& f : c.formats) {
    if (f != "csv" && f != "json" && f != "svg")
      throw ValidationError("audit config: unknown format \"" + f + "\"");
  }
  return c;
}

AuditRunConfig load_audit_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open audit config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("audit config " + path.string() + ": " + e.what());
  }
  auto c = audit_config_from_json(j);
  // Relative paths in the file are relative to the file.
  const auto base = path.parent_path();
  auto rebase = [&](std::filesystem::path& p) {
    if (p.is_relative()) p = base / p;
  };
  rebase(c.workspace);
  rebase(c.output_dir);
  if (c.embeddings_file) rebase(*c.embeddings_file);
  if (c.stopwords_file) rebase(*c.stopwords_file);
  return c;
}

nlohmann::ordered_json audit_config_to_json(const AuditRunConfig& c) {
  nlohmann::ordered_json j;
  j["topics"] = c.topics;
  j["models"] = c.models;
  j["n"] = c.n;
  j["vocab_threshold"] = c.vocab_threshold;
  j["featurizer"] = c.featurizer;
  j["embeddings_file"] = c.embeddings_file ? nlohmann::ordered_json(c.embeddings_file->string())
                                           : nlohmann::ordered_json(nullptr);
  j["seed"] = c.seed;
  j["formats"] = c.formats;
  j["stopwords_file"] = c.stopwords_file ? nlohmann::ordered_json(c.stopwords_file->string())
                                         : nlohmann::ordered_json(nullptr);
  j["stem"] = c.stem;
  j["hashed_dims"] = c.hashed_dims;
  return j;
}

nlohmann::ordered_json manifest_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["tool_version"] = std::string(kVersion);
  j["seed"] = m.config.value("seed", 0);
  j["config"] = m.config;
  j["corpus_sha256"] = m.corpus_sha256;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& e : m.files) {
    nlohmann::ordered_json f;
    f["path"] = e.path;
    f["kind"] = e.kind;
    f["sha256"] = e.sha256;
    j["files"].push_back(std::move(f));
  }
  j["metrics"] = m.metrics;
  return j;
}

Manifest run_audit(const AuditRunConfig& config) {
  Workspace workspace(config.workspace);
  const auto corpus = workspace.load();
  if (corpus.empty()) throw MissingDataError("workspace " + config.workspace.string() + " is empty");

  auto topics = config.topics;
  if (topics.empty()) {
    for (const auto& t : corpus.topics().topics()) {
      const bool has = std::any_of(corpus.articles().begin(), corpus.articles().end(),
                                   [&](const auto& kv) { return kv.second.topic == t; });
      if (has) topics.push_back(t);
    }
  }
  auto models = config.models.empty() ? corpus.model_ids() : config.models;
  if (models.empty()) throw MissingDataError("no summaries in workspace");
  const auto known_models = corpus.model_ids();
  for (const auto& t : topics) {
    if (!corpus.topics().contains(t)) throw ValidationError("unknown topic \"" + t + "\"");
  }
  for (const auto& m : models) {
    if (!std::binary_search(known_models.begin(), known_models.end(), m))
      throw ValidationError("unknown model_id \"" + m + "\"");
  }

  // records[topic][model][alignment]
  std::map<std::string, std::map<std::string, std::array<std::vector<SummaryRecord>, 3>>> records;
  for (const auto& [key, r] : corpus.summaries()) {
    const auto& topic = corpus.topic_of(r);
    if (std::find(topics.begin(), topics.end(), topic) == topics.end()) continue;
    if (std::find(models.begin(), models.end(), key.model_id) == models.end()) continue;
    records[topic][key.model_id][static_cast<std::size_t>(key.alignment)].push_back(r);
  }
  std::string missing;
  for (const auto& t : topics) {
    for (const auto& m : models) {
      for (auto a : kAlignments) {
        if (records[t][m][static_cast<std::size_t>(a)].empty())
          missing += " (" + t + ", " + m + ", " + std::string(to_string(a)) + ")";
      }
    }
  }
  if (!missing.empty()) throw MissingDataError("missing alignment coverage:" + missing);

  const auto tokenizer = make_tokenizer(config);
  const auto featurizer = make_featurizer(config);
  OutputDir out(config.output_dir);
  Manifest manifest;
  manifest.config = audit_config_to_json(config);
  {
    std::ostringstream canon;
    corpus.write_articles(canon);
    corpus.write_summaries(canon);
    manifest.corpus_sha256 = sha256_hex(canon.str());
  }
  const bool csv = wants(config, "csv");
  const bool json = wants(config, "json");
  const bool svg = wants(config, "svg");

  // Corpus and summary-length statistics.
  const auto stats = compute_stats(corpus);
  const auto lengths = summary_length_report(corpus);
  out.write("stats.json", "stats", stats_json(stats, lengths).dump(2) + "\n");

  // Per-topic bias tables, then pooled per model for the consistency index.
  std::map<std::string, std::vector<BiasTable>> per_model_tables;
  for (const auto& m : models) {
    for (const auto& t : topics) {
      const auto& cell = records[t][m];
      auto dem = distribution(cell[static_cast<std::size_t>(Alignment::Democrat)], tokenizer);
      auto rep = distribution(cell[static_cast<std::size_t>(Alignment::Republican)], tokenizer);
      auto table = bias_table(dem, rep, config.n, config.vocab_threshold);
      const auto stem = "lexicon_" + file_stem(m) + "_" + file_stem(t);
      if (csv) out.write(stem + ".csv", "bias_table", to_csv(bias_csv_table(table)));
      if (json) out.write(stem + ".json", "bias_table", bias_json(table).dump(2) + "\n");
      per_model_tables[m].push_back(std::move(table));
    }
  }

  // Separability and the polarization grid.
  std::vector<SeparabilityResult> results;
  for (const auto& t : topics) {
    for (const auto& m : models) {
      const auto& cell = records[t][m];
      for (auto contrast : {Contrast::NeutralVsDemocrat, Contrast::NeutralVsRepublican}) {
        DiffOptions opts;
        opts.topic = t;
        opts.training.seed = config.seed;
        auto r = diff(cell[static_cast<std::size_t>(Alignment::Neutral)],
                      cell[static_cast<std::size_t>(aligned_side(contrast))], *featurizer,
                      config.seed, opts);
        r.model_id = m;
        r.contrast = contrast;
        results.push_back(std::move(r));
      }
    }
  }
  const auto report = polarization_report(results);
  if (!summary_consistent(report))
    throw std::logic_error("per-topic summary is not derivable from the polarization grid");
  out.write("polarization.csv", "polarization_grid", to_csv(polarization_table(report)));
  out.write("polarization.txt", "polarization_text", polarization_text(report));
  out.write("separability.csv", "separability", to_csv(separability_table(results)));

  nlohmann::ordered_json metrics;
  metrics["polarization_grand_mean"] = report.grand_mean;

  // Vocabulary consistency per ideology.
  std::map<std::string, BiasTable> pooled;
  for (const auto& m : models) pooled.emplace(m, pool_bias_tables(per_model_tables[m], config.n));
  if (models.size() >= 2) {
    for (auto ideology : {Ideology::Democrat, Ideology::Republican}) {
      auto ci = consistency_index(pooled, ideology);
      const auto name = "ci_" + std::string(to_string(ideology));
      out.write(name + ".csv", "ci_matrix", to_csv(matrix_table(ci.overlap.matrix, "model")));
      if (svg)
        out.write(name + ".svg", "ci_heatmap",
                  render_heatmap(ci.overlap.matrix, Palette::Diverging,
                                 "Consistency index (" + std::string(to_string(ideology)) + ")"));
      metrics[name]["overall_mean"] = ci.overall_mean;
      metrics[name]["off_diagonal_mean"] = ci.off_diagonal_mean;
      metrics[name]["n"] = ci.overlap.n;
      metrics[name]["normalization"] = ci.overlap.normalization_note;
    }
  }

  // Cross-model classifier transfer, topics pooled.
  for (auto contrast : {Contrast::NeutralVsDemocrat, Contrast::NeutralVsRepublican}) {
    std::vector<ModelSummaries> per_model;
    for (const auto& m : models) {
      ModelSummaries ms;
      ms.model_id = m;
      for (const auto& t : topics) {
        const auto& cell = records[t][m];
        const auto& n = cell[static_cast<std::size_t>(Alignment::Neutral)];
        const auto& a = cell[static_cast<std::size_t>(aligned_side(contrast))];
        ms.neutral.insert(ms.neutral.end(), n.begin(), n.end());
        ms.aligned.insert(ms.aligned.end(), a.begin(), a.end());
      }
      per_model.push_back(std::move(ms));
    }
    TrainingOptions training;
    training.seed = config.seed;
    auto tm = transfer_matrix(per_model, contrast, *featurizer, config.seed, training);
    const auto side = std::string(to_string(aligned_side(contrast)));
    const auto name = "transfer_" + side;
    out.write(name + ".csv", "transfer_matrix", to_csv(matrix_table(tm.matrix, "source")));
    if (svg) {
      SquareMatrix pct = tm.matrix;
      for (auto& row : pct.cells)
        for (auto& v : row) v *= 100.0;
      out.write(name + ".svg", "transfer_heatmap",
                render_heatmap(pct, Palette::Diverging,
                               "Classifier transfer accuracy % (neutral vs " + side + ")"));
    }
    metrics[name]["diagonal_mean"] = tm.diagonal_mean;
    metrics[name]["off_diagonal_mean"] = tm.off_diagonal_mean;
  }

  manifest.files = out.take();
  manifest.metrics = std::move(metrics);
  std::ofstream mf(out.root() / "manifest.json", std::ios::binary | std::ios::trunc);
  mf << manifest_json(manifest).dump(2) << "\n";
  return manifest;
}

}  // namespace polaudit
