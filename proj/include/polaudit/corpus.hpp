#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polaudit {

enum class Alignment { Neutral, Democrat, Republican };

inline constexpr std::array<Alignment, 3> kAlignments = {
    Alignment::Neutral, Alignment::Democrat, Alignment::Republican};

std::string_view to_string(Alignment a);
// Accepts "neutral" | "democrat" | "republican". Throws ValidationError.
Alignment parse_alignment(std::string_view s);

// Whitespace-delimited word count after trimming.
std::size_t count_words(std::string_view text);
// Sentences end at a run of '.', '!' or '?' followed by whitespace or end of
// text; a trailing unterminated fragment counts as one more sentence.
std::size_t count_sentences(std::string_view text);

struct Article {
  std::string article_id;
  std::string topic;
  std::string text;
  std::optional<std::string> source_url;
  std::optional<int> published_year;
};

struct SummaryKey {
  std::string article_id;
  std::string model_id;
  Alignment alignment = Alignment::Neutral;

  auto operator<=>(const SummaryKey&) const = default;
};

struct SummaryRecord {
  std::string article_id;
  std::string model_id;
  Alignment alignment = Alignment::Neutral;
  std::string text;
  std::size_t word_count = 0;
  // Set for records produced by the generation client; identifies the prompt
  // template the summary was produced with.
  std::optional<std::string> prompt_hash;

  SummaryKey key() const { return {article_id, model_id, alignment}; }
};

// Builds a record and derives word_count from the text.
SummaryRecord make_summary(std::string article_id, std::string model_id,
                           Alignment alignment, std::string text,
                           std::optional<std::string> prompt_hash = std::nullopt);

// Declared topic vocabulary. Defaults to the five US hot-button issues.
class TopicRegistry {
 public:
  TopicRegistry();
  explicit TopicRegistry(std::vector<std::string> topics);

  static TopicRegistry load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool contains(std::string_view topic) const;
  const std::vector<std::string>& topics() const { return topics_; }

 private:
  std::vector<std::string> topics_;
};

struct IngestIssue {
  std::size_t line = 0;
  std::string message;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::vector<IngestIssue> errors;          // malformed / invalid / dangling
  std::vector<std::size_t> duplicate_lines; // rejected by key

  bool clean() const { return errors.empty() && duplicate_lines.empty(); }
};

struct SummaryFilter {
  std::optional<std::string> topic;
  std::optional<std::string> model_id;
  std::optional<Alignment> alignment;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(TopicRegistry topics) : topics_(std::move(topics)) {}

  const TopicRegistry& topics() const { return topics_; }

  // Throw ValidationError on schema or key violations.
  void add_article(Article article);
  void add_summary(SummaryRecord record);
  // Inserts or replaces by key. The referenced article must exist.
  void upsert_summary(SummaryRecord record);

  IngestReport ingest_articles(std::istream& in);
  IngestReport ingest_summaries(std::istream& in);

  const Article* find_article(std::string_view article_id) const;
  const SummaryRecord* find_summary(const SummaryKey& key) const;
  const std::string& topic_of(const SummaryRecord& record) const;

  const std::map<std::string, Article, std::less<>>& articles() const { return articles_; }
  const std::map<SummaryKey, SummaryRecord>& summaries() const { return summaries_; }

  // Matching records ordered by (article_id, model_id, alignment). Throws
  // ValidationError when a filter names an undeclared topic or an absent model.
  std::vector<SummaryRecord> select(const SummaryFilter& filter = {}) const;

  // Model ids present in the summary store, sorted.
  std::vector<std::string> model_ids() const;

  // One JSON object per line with normalized field order.
  void write_articles(std::ostream& out) const;
  void write_summaries(std::ostream& out) const;

  bool empty() const { return articles_.empty(); }

 private:
  TopicRegistry topics_;
  std::map<std::string, Article, std::less<>> articles_;
  std::map<SummaryKey, SummaryRecord> summaries_;
};

// Parsers for one JSONL line. Throw ValidationError with a readable reason.
Article parse_article_line(std::string_view line, const TopicRegistry& topics);
SummaryRecord parse_summary_line(std::string_view line);
std::string article_to_json(const Article& article);
std::string summary_to_json(const SummaryRecord& record);

struct TopicStats {
  std::string topic;
  std::size_t article_count = 0;
  double mean_words_per_article = 0.0;
  double mean_sentences_per_article = 0.0;
};

struct SummaryLengthStats {
  std::string model_id;
  Alignment alignment = Alignment::Neutral;
  std::size_t summary_count = 0;
  double mean_words_per_summary = 0.0;
};

struct CorpusStats {
  std::vector<TopicStats> topics;            // declared order, non-empty topics only
  std::vector<SummaryLengthStats> summaries; // ordered by (model_id, alignment)
  std::map<int, std::size_t> articles_per_year;
};

// Throws MissingDataError on an empty corpus (or an empty topic selection).
CorpusStats compute_stats(const Corpus& corpus,
                          const std::optional<std::string>& topic = std::nullopt);

enum class RecordKind { Articles, Summaries };

// Directory holding topics.json, articles.jsonl and summaries.jsonl.
// Readers need no lock; mutations take an exclusive advisory lock.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path articles_path() const { return root_ / "articles.jsonl"; }
  std::filesystem::path summaries_path() const { return root_ / "summaries.jsonl"; }
  std::filesystem::path topics_path() const { return root_ / "topics.json"; }

  // Loads the stored corpus. Later summary lines replace earlier ones with the
  // same key (the generation client appends as it goes).
  Corpus load() const;
  // Rewrites both record files in normalized, sorted form.
  void save(const Corpus& corpus) const;

  IngestReport ingest(const std::filesystem::path& file, RecordKind kind) const;

  // Appends one record to summaries.jsonl. Caller holds the lock.
  void append_summary(const SummaryRecord& record) const;

  class Lock {
   public:
    explicit Lock(const std::filesystem::path& lock_file);
    ~Lock();
    Lock(const Lock&) = delete;
    Lock& operator=(const Lock&) = delete;

   private:
    int fd_ = -1;
  };

  Lock lock() const { return Lock(root_ / ".lock"); }

 private:
  std::filesystem::path root_;
};

}  // namespace polaudit
