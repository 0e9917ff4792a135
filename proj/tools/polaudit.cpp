#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "polaudit/corpus.hpp"
#include "polaudit/errors.hpp"
#include "polaudit/features.hpp"
#include "polaudit/lexicon.hpp"
#include "polaudit/monoculture.hpp"
#include "polaudit/report.hpp"
#include "polaudit/separability.hpp"
#include "polaudit/summarygen.hpp"
#include "polaudit/synth.hpp"

namespace fs = std::filesystem;
using namespace polaudit;

namespace {

struct Globals {
  std::string workspace = ".";
  std::uint64_t seed = 0;
};

struct LexiconArgs {
  std::string topic;
  std::string model_id;
  std::size_t n = 20;
  std::uint64_t threshold = 5;
  std::string format = "csv";
  std::string stopwords;
  bool stem = false;
};

struct PolarizeArgs {
  std::string topic = "all";
  std::string model_id = "all";
  std::string featurizer = "hashed";
  std::string embeddings_file;
  std::string format = "text";
};

struct MonocultureArgs {
  std::string ideology = "democrat";
  std::string contrast = "democrat";
  std::string topic = "all";
  std::size_t n = 20;
  std::uint64_t threshold = 5;
  std::string featurizer = "hashed";
  std::string embeddings_file;
  std::string format = "csv";
};

Tokenizer make_tokenizer(const std::string& stopwords, bool stem) {
  if (!stopwords.empty()) return Tokenizer::from_stopword_file(stopwords, stem);
  return Tokenizer(std::unordered_set<std::string>(default_stopwords().begin(),
                                                   default_stopwords().end()),
                   stem);
}

std::unique_ptr<Featurizer> make_featurizer(const std::string& mode, const std::string& file) {
  if (mode == "hashed") return std::make_unique<HashedNgramFeaturizer>();
  if (mode == "embeddings") {
    if (file.empty()) throw ValidationError("--featurizer embeddings needs --embeddings-file");
    return std::make_unique<EmbeddingFeaturizer>(EmbeddingFeaturizer::load(file));
  }
  throw ValidationError("unknown featurizer \"" + mode + "\"");
}

std::vector<std::string> topics_for(const Corpus& corpus, const std::string& arg) {
  if (arg != "all") {
    if (!corpus.topics().contains(arg)) throw ValidationError("unknown topic \"" + arg + "\"");
    return {arg};
  }
  std::vector<std::string> out;
  for (const auto& t : corpus.topics().topics()) {
    const bool has = std::any_of(corpus.articles().begin(), corpus.articles().end(),
                                 [&](const auto& kv) { return kv.second.topic == t; });
    if (has) out.push_back(t);
  }
  if (out.empty()) throw MissingDataError("no articles in workspace");
  return out;
}

std::vector<std::string> models_for(const Corpus& corpus, const std::string& arg) {
  auto known = corpus.model_ids();
  if (arg == "all") {
    if (known.empty()) throw MissingDataError("no summaries in workspace");
    return known;
  }
  if (!std::binary_search(known.begin(), known.end(), arg))
    throw ValidationError("unknown model_id \"" + arg + "\"");
  return {arg};
}

std::vector<SummaryRecord> records(const Corpus& corpus, const std::optional<std::string>& topic,
                                   const std::string& model, Alignment alignment) {
  auto out = corpus.select({topic, model, alignment});
  if (out.empty())
    throw MissingDataError("no " + std::string(to_string(alignment)) + " summaries for model " +
                           model + (topic ? " on topic " + *topic : std::string()));
  return out;
}

Corpus load(const Globals& g) {
  auto corpus = Workspace(g.workspace).load();
  if (corpus.empty()) throw MissingDataError("workspace " + g.workspace + " has no articles");
  return corpus;
}

void print_matrix_summary(const SquareMatrix& m, const std::string& corner, double overall,
                          double off_diagonal, const std::string& format,
                          nlohmann::ordered_json extra = {}) {
  if (format == "json") {
    nlohmann::ordered_json j = std::move(extra);
    j["labels"] = m.labels;
    j["cells"] = m.cells;
    j["overall_mean"] = overall;
    j["off_diagonal_mean"] = off_diagonal;
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::cout << to_csv(matrix_table(m, corner));
  std::cerr << "overall_mean=" << format_number(overall)
            << " off_diagonal_mean=" << format_number(off_diagonal) << "\n";
}

int cmd_ingest(const Globals& g, const std::string& kind, const std::string& path) {
  RecordKind k;
  if (kind == "articles") k = RecordKind::Articles;
  else if (kind == "summaries") k = RecordKind::Summaries;
  else throw ValidationError("--kind must be articles or summaries");
  if (!fs::exists(path)) throw ValidationError("no such file: " + path);
  fs::create_directories(g.workspace);
  const auto report = Workspace(g.workspace).ingest(path, k);
  for (const auto& e : report.errors) std::cerr << path << ":" << e.line << ": " << e.message << "\n";
  for (auto line : report.duplicate_lines)
    std::cerr << path << ":" << line << ": duplicate key\n";
  std::cout << "accepted " << report.accepted << "\n";
  if (!report.duplicate_lines.empty())
    std::cout << "duplicates " << report.duplicate_lines.size() << "\n";
  return report.errors.empty() ? 0 : 2;
}

int cmd_stats(const Globals& g, const std::string& topic, const std::string& format) {
  const auto corpus = load(g);
  std::optional<std::string> t;
  if (!topic.empty()) {
    if (!corpus.topics().contains(topic)) throw ValidationError("unknown topic \"" + topic + "\"");
    t = topic;
  }
  const auto stats = compute_stats(corpus, t);
  const auto lengths = summary_length_report(corpus);
  if (format == "json") {
    std::cout << stats_json(stats, lengths).dump(2) << "\n";
  } else {
    std::cout << to_csv(topic_stats_table(stats));
    if (!lengths.empty()) std::cout << "\n" << to_csv(summary_length_table(lengths));
  }
  return 0;
}

int cmd_lexicon(const Globals& g, const LexiconArgs& a) {
  const auto corpus = load(g);
  if (!corpus.topics().contains(a.topic)) throw ValidationError("unknown topic \"" + a.topic + "\"");
  models_for(corpus, a.model_id);
  const auto tokenizer = make_tokenizer(a.stopwords, a.stem);
  const auto label = a.model_id + "/";
  auto dem = distribution(records(corpus, a.topic, a.model_id, Alignment::Democrat), tokenizer,
                          label + "democrat/" + a.topic);
  auto rep = distribution(records(corpus, a.topic, a.model_id, Alignment::Republican), tokenizer,
                          label + "republican/" + a.topic);
  const auto table = bias_table(dem, rep, a.n, a.threshold);
  if (a.format == "json") std::cout << bias_json(table).dump(2) << "\n";
  else std::cout << to_csv(bias_csv_table(table));
  if (table.truncated)
    std::cerr << "note: only " << table.entries.size() << " tokens reach the threshold\n";
  return 0;
}

int cmd_polarize(const Globals& g, const PolarizeArgs& a) {
  const auto corpus = load(g);
  const auto topics = topics_for(corpus, a.topic);
  const auto models = models_for(corpus, a.model_id);
  const auto featurizer = make_featurizer(a.featurizer, a.embeddings_file);
  std::vector<SeparabilityResult> results;
  for (const auto& t : topics) {
    for (const auto& m : models) {
      const auto neutral = records(corpus, t, m, Alignment::Neutral);
      for (auto contrast : {Contrast::NeutralVsDemocrat, Contrast::NeutralVsRepublican}) {
        DiffOptions opts;
        opts.topic = t;
        opts.training.seed = g.seed;
        auto r = diff(neutral, records(corpus, t, m, aligned_side(contrast)), *featurizer, g.seed,
                      opts);
        r.model_id = m;
        r.contrast = contrast;
        results.push_back(std::move(r));
      }
    }
  }
  const auto report = polarization_report(results);
  if (a.format == "csv") {
    std::cout << to_csv(polarization_table(report));
  } else if (a.format == "json") {
    nlohmann::ordered_json j;
    j["seed"] = g.seed;
    j["featurizer"] = a.featurizer;
    j["results"] = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      nlohmann::ordered_json x;
      x["topic"] = r.topic;
      x["model_id"] = r.model_id;
      x["contrast"] = std::string(to_string(*r.contrast));
      x["fold_accuracies"] = r.fold_accuracies;
      x["mean_accuracy"] = r.mean_accuracy;
      x["n_neutral"] = r.n_neutral;
      x["n_aligned"] = r.n_aligned;
      j["results"].push_back(std::move(x));
    }
    const auto grid = polarization_table(report);
    j["polarization"]["header"] = grid.header;
    j["polarization"]["rows"] = grid.rows;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << polarization_text(report);
  }
  return 0;
}

std::map<std::string, BiasTable> pooled_tables(const Corpus& corpus, const MonocultureArgs& a) {
  const auto topics = topics_for(corpus, a.topic);
  const auto tokenizer = make_tokenizer({}, false);
  std::map<std::string, BiasTable> out;
  for (const auto& m : models_for(corpus, "all")) {
    std::vector<BiasTable> per_topic;
    for (const auto& t : topics) {
      auto dem = distribution(records(corpus, t, m, Alignment::Democrat), tokenizer);
      auto rep = distribution(records(corpus, t, m, Alignment::Republican), tokenizer);
      per_topic.push_back(bias_table(dem, rep, a.n, a.threshold));
    }
    out.emplace(m, pool_bias_tables(per_topic, a.n));
  }
  return out;
}

int cmd_vocab(const Globals& g, const MonocultureArgs& a) {
  const auto corpus = load(g);
  const auto ci = consistency_index(pooled_tables(corpus, a), parse_ideology(a.ideology));
  nlohmann::ordered_json extra;
  extra["ideology"] = std::string(to_string(ci.overlap.ideology));
  extra["n"] = ci.overlap.n;
  extra["normalization"] = ci.overlap.normalization_note;
  print_matrix_summary(ci.overlap.matrix, "model", ci.overall_mean, ci.off_diagonal_mean,
                       a.format, std::move(extra));
  return 0;
}

int cmd_transfer(const Globals& g, const MonocultureArgs& a) {
  const auto corpus = load(g);
  const auto contrast = parse_contrast(a.contrast);
  const auto topics = topics_for(corpus, a.topic);
  std::vector<ModelSummaries> per_model;
  for (const auto& m : models_for(corpus, "all")) {
    ModelSummaries ms;
    ms.model_id = m;
    for (const auto& t : topics) {
      auto n = records(corpus, t, m, Alignment::Neutral);
      auto s = records(corpus, t, m, aligned_side(contrast));
      ms.neutral.insert(ms.neutral.end(), n.begin(), n.end());
      ms.aligned.insert(ms.aligned.end(), s.begin(), s.end());
    }
    per_model.push_back(std::move(ms));
  }
  const auto featurizer = make_featurizer(a.featurizer, a.embeddings_file);
  TrainingOptions training;
  training.seed = g.seed;
  const auto tm = transfer_matrix(per_model, contrast, *featurizer, g.seed, training);
  const auto means = matrix_means(tm.matrix);
  nlohmann::ordered_json extra;
  extra["contrast"] = std::string(to_string(contrast));
  extra["seed"] = g.seed;
  extra["diagonal_mean"] = tm.diagonal_mean;
  print_matrix_summary(tm.matrix, "source", means.overall, tm.off_diagonal_mean, a.format,
                       std::move(extra));
  return 0;
}

int cmd_synth(const Globals& g, const std::string& spec_path, const std::string& out) {
  auto specs = load_synth_specs(spec_path);
  const Workspace ws(out.empty() ? g.workspace : out);
  fs::create_directories(ws.root());
  auto guard = ws.lock();
  auto topics = fs::exists(ws.topics_path()) ? TopicRegistry::load(ws.topics_path()).topics()
                                             : TopicRegistry().topics();
  for (const auto& spec : specs) {
    for (const auto& t : spec.topics) {
      if (std::find(topics.begin(), topics.end(), t) == topics.end()) topics.push_back(t);
    }
  }
  TopicRegistry(topics).save(ws.topics_path());
  auto corpus = ws.load();
  for (const auto& spec : specs) add_synth(corpus, spec);
  ws.save(corpus);
  std::cout << "articles " << corpus.articles().size() << "\nsummaries "
            << corpus.summaries().size() << "\n";
  return 0;
}

int cmd_generate(const Globals& g, GenerationConfig config, const std::string& articles,
                 const std::string& templates) {
  if (!templates.empty()) config.templates = TemplateSet::load(templates);
  const Workspace ws(g.workspace);
  fs::create_directories(ws.root());
  if (!articles.empty()) {
    // Register any new articles, then restrict generation to the file's ids.
    std::ifstream in(articles);
    if (!in) throw ValidationError("cannot open " + articles);
    Corpus scratch(fs::exists(ws.topics_path()) ? TopicRegistry::load(ws.topics_path())
                                                : TopicRegistry());
    const auto report = scratch.ingest_articles(in);
    for (const auto& e : report.errors)
      std::cerr << articles << ":" << e.line << ": " << e.message << "\n";
    if (!report.errors.empty()) return 2;
    {
      auto guard = ws.lock();
      auto corpus = ws.load();
      for (const auto& [id, article] : scratch.articles()) {
        if (!corpus.find_article(id)) corpus.add_article(article);
        config.article_ids.push_back(id);
      }
      ws.save(corpus);
    }
  }
  const auto counts = generate(ws, config);
  for (const auto& job : counts.failures)
    std::cerr << "failed " << job.article_id << " " << to_string(job.alignment) << ": "
              << job.failure_reason << "\n";
  std::cout << "done " << counts.done << "\nskipped " << counts.skipped << "\nfailed "
            << counts.failed << "\nrequests " << counts.requests << "\n";
  return counts.failed == 0 ? 0 : 1;
}

int cmd_audit(const Globals& g, const std::string& config_path, bool seed_given) {
  auto config = load_audit_config(config_path);
  if (seed_given) config.seed = g.seed;
  const auto manifest = run_audit(config);
  std::cout << "wrote " << manifest.files.size() << " files to " << config.output_dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Political-neutrality audits of LLM-generated news summaries"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Globals g;
  app.add_option("--workspace,-w", g.workspace, "Workspace directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");

  std::string kind, path;
  auto* ingest = app.add_subcommand("ingest", "Validate and store JSONL records");
  ingest->add_option("--kind", kind, "articles | summaries")->required();
  ingest->add_option("--path", path, "JSONL file")->required();

  std::string stats_topic, stats_format = "csv";
  auto* stats = app.add_subcommand("stats", "Corpus and summary-length statistics");
  stats->add_option("--topic", stats_topic);
  stats->add_option("--format", stats_format)->check(CLI::IsMember({"csv", "json"}));

  LexiconArgs lex;
  auto* lexicon = app.add_subcommand("lexicon", "Token bias scores for one topic and model");
  lexicon->add_option("--topic", lex.topic)->required();
  lexicon->add_option("--model-id", lex.model_id)->required();
  lexicon->add_option("--n", lex.n)->check(CLI::PositiveNumber);
  lexicon->add_option("--threshold", lex.threshold, "Minimum combined token count");
  lexicon->add_option("--format", lex.format)->check(CLI::IsMember({"csv", "json"}));
  lexicon->add_option("--stopwords", lex.stopwords, "Stopword file replacing the default list");
  lexicon->add_flag("--stem", lex.stem, "Light suffix stripping");

  PolarizeArgs pol;
  auto* polarize = app.add_subcommand("polarize", "Separability and polarization index");
  polarize->add_option("--topic", pol.topic, "Topic or \"all\"");
  polarize->add_option("--model-id", pol.model_id, "Model id or \"all\"");
  polarize->add_option("--featurizer", pol.featurizer)
      ->check(CLI::IsMember({"hashed", "embeddings"}));
  polarize->add_option("--embeddings-file", pol.embeddings_file);
  polarize->add_option("--seed", g.seed);
  polarize->add_option("--format", pol.format)->check(CLI::IsMember({"csv", "json", "text"}));

  MonocultureArgs mono;
  auto* monoculture = app.add_subcommand("monoculture", "Cross-model homogeneity");
  monoculture->require_subcommand(1);
  auto* vocab = monoculture->add_subcommand("vocab", "Consistency index over top-N tokens");
  vocab->add_option("--ideology", mono.ideology)->check(CLI::IsMember({"democrat", "republican"}));
  vocab->add_option("--n", mono.n)->check(CLI::PositiveNumber);
  vocab->add_option("--threshold", mono.threshold);
  vocab->add_option("--topic", mono.topic, "Topic or \"all\" (pooled)");
  vocab->add_option("--format", mono.format)->check(CLI::IsMember({"csv", "json"}));
  auto* transfer = monoculture->add_subcommand("transfer", "Cross-model classifier transfer");
  transfer->add_option("--contrast", mono.contrast)
      ->check(CLI::IsMember({"democrat", "republican"}));
  transfer->add_option("--seed", g.seed);
  transfer->add_option("--topic", mono.topic, "Topic or \"all\" (pooled)");
  transfer->add_option("--featurizer", mono.featurizer)
      ->check(CLI::IsMember({"hashed", "embeddings"}));
  transfer->add_option("--embeddings-file", mono.embeddings_file);
  transfer->add_option("--format", mono.format)->check(CLI::IsMember({"csv", "json"}));

  std::string spec_path, synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--spec", spec_path)->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Workspace to write (defaults to --workspace)");

  GenerationConfig gen;
  std::string gen_articles, gen_templates;
  int timeout_ms = 60'000;
  auto* generate_cmd = app.add_subcommand("generate", "Produce summaries from an endpoint");
  generate_cmd->add_option("--model-id", gen.model_id)->required();
  generate_cmd->add_option("--endpoint", gen.endpoint)->required();
  generate_cmd->add_option("--articles", gen_articles, "Articles JSONL to summarize");
  generate_cmd->add_option("--templates", gen_templates, "Prompt template JSON");
  generate_cmd->add_option("--concurrency", gen.concurrency)->check(CLI::PositiveNumber);
  generate_cmd->add_option("--temperature", gen.decoding.temperature);
  generate_cmd->add_option("--max-tokens", gen.decoding.max_tokens);
  generate_cmd->add_option("--retries", gen.retry.max_attempts, "Attempts per request");
  generate_cmd->add_option("--timeout-ms", timeout_ms);
  generate_cmd->add_option("--credential-env", gen.credential_env,
                           "Environment variable holding the bearer credential");

  std::string audit_config;
  auto* audit = app.add_subcommand("audit", "Full audit run");
  audit->add_option("--config", audit_config)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(g, kind, path);
    if (*stats) return cmd_stats(g, stats_topic, stats_format);
    if (*lexicon) return cmd_lexicon(g, lex);
    if (*polarize) return cmd_polarize(g, pol);
    if (*vocab) return cmd_vocab(g, mono);
    if (*transfer) return cmd_transfer(g, mono);
    if (*synth) return cmd_synth(g, spec_path, synth_out);
    if (*generate_cmd) {
      gen.retry.request_timeout = std::chrono::milliseconds(timeout_ms);
      return cmd_generate(g, gen, gen_articles, gen_templates);
    }
    if (*audit) return cmd_audit(g, audit_config, seed_opt->count() > 0);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MissingDataError& e) {
    std::cerr << "missing data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
