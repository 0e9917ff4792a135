#include "polaudit/corpus.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polaudit/errors.hpp"

namespace polaudit {

using ordered_json = nlohmann::ordered_json;

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

const nlohmann::json& require_field(const nlohmann::json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ValidationError(std::string("missing field \"") + name + "\"");
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* name) {
  const auto& v = require_field(obj, name);
  if (!v.is_string()) throw ValidationError(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

nlohmann::json parse_object(std::string_view line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ValidationError("record is not a JSON object");
  return obj;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), is_space);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string_view to_string(Alignment a) {
  switch (a) {
    case Alignment::Neutral:
      return "neutral";
    case Alignment::Democrat:
      return "democrat";
    case Alignment::Republican:
      return "republican";
  }
  return "neutral";
}

Alignment parse_alignment(std::string_view s) {
  if (s == "neutral") return Alignment::Neutral;
  if (s == "democrat") return Alignment::Democrat;
  if (s == "republican") return Alignment::Republican;
  throw ValidationError("unknown alignment \"" + std::string(s) + "\"");
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::size_t count_sentences(std::string_view text) {
  std::size_t n = 0;
  bool pending = false;  // non-space content since the last boundary
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_terminator(c)) {
      std::size_t j = i;
      while (j < text.size() && is_terminator(text[j])) ++j;
      while (j < text.size() && is_closer(text[j])) ++j;
      if (j == text.size() || is_space(text[j])) {
        if (pending) ++n;
        pending = false;
      } else {
        pending = true;
      }
      i = j;
      continue;
    }
    if (!is_space(c)) pending = true;
    ++i;
  }
  return pending ? n + 1 : n;
}

SummaryRecord make_summary(std::string article_id, std::string model_id, Alignment alignment,
                           std::string text, std::optional<std::string> prompt_hash) {
  SummaryRecord r;
  r.article_id = std::move(article_id);
  r.model_id = std::move(model_id);
  r.alignment = alignment;
  r.word_count = count_words(text);
  r.text = std::move(text);
  r.prompt_hash = std::move(prompt_hash);
  return r;
}

// ---------------------------------------------------------------------------

TopicRegistry::TopicRegistry()
    : topics_{"Abortion", "GunControl", "Healthcare", "Immigration", "LGBTQ"} {}

TopicRegistry::TopicRegistry(std::vector<std::string> topics) : topics_(std::move(topics)) {
  std::set<std::string> seen;
  for (const auto& t : topics_) {
    if (t.empty()) throw ValidationError("empty topic name");
    if (!seen.insert(t).second) throw ValidationError("duplicate topic \"" + t + "\"");
  }
  if (topics_.empty()) throw ValidationError("topic list is empty");
}

TopicRegistry TopicRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open topic file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("topic file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("topics") || !doc["topics"].is_array())
    throw ValidationError("topic file must be {\"topics\": [...]}");
  std::vector<std::string> topics;
  for (const auto& t : doc["topics"]) {
    if (!t.is_string()) throw ValidationError("topic names must be strings");
    topics.push_back(t.get<std::string>());
  }
  return TopicRegistry(std::move(topics));
}

void TopicRegistry::save(const std::filesystem::path& path) const {
  ordered_json doc;
  doc["topics"] = topics_;
  write_file_atomic(path, doc.dump(2) + "\n");
}

bool TopicRegistry::contains(std::string_view topic) const {
  return std::find(topics_.begin(), topics_.end(), topic) != topics_.end();
}

// ---------------------------------------------------------------------------

Article parse_article_line(std::string_view line, const TopicRegistry& topics) {
  auto obj = parse_object(line);
  Article a;
  a.article_id = require_string(obj, "article_id");
  if (a.article_id.empty()) throw ValidationError("empty article_id");
  a.topic = require_string(obj, "topic");
  if (!topics.contains(a.topic)) throw ValidationError("unknown topic \"" + a.topic + "\"");
  a.text = require_string(obj, "text");
  if (count_words(a.text) == 0) throw ValidationError("empty article text");
  if (auto it = obj.find("source_url"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("field \"source_url\" must be a string");
    a.source_url = it->get<std::string>();
  }
  if (auto it = obj.find("published_year"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ValidationError("field \"published_year\" must be an integer");
    a.published_year = it->get<int>();
  }
  return a;
}

SummaryRecord parse_summary_line(std::string_view line) {
  auto obj = parse_object(line);
  auto article_id = require_string(obj, "article_id");
  auto model_id = require_string(obj, "model_id");
  if (article_id.empty()) throw ValidationError("empty article_id");
  if (model_id.empty()) throw ValidationError("empty model_id");
  auto alignment = parse_alignment(require_string(obj, "alignment"));
  std::optional<std::string> prompt_hash;
  if (auto it = obj.find("prompt_hash"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("field \"prompt_hash\" must be a string");
    prompt_hash = it->get<std::string>();
  }
  return make_summary(std::move(article_id), std::move(model_id), alignment,
                      require_string(obj, "text"), std::move(prompt_hash));
}

std::string article_to_json(const Article& a) {
  ordered_json j;
  j["article_id"] = a.article_id;
  j["topic"] = a.topic;
  j["text"] = a.text;
  if (a.source_url) j["source_url"] = *a.source_url;
  if (a.published_year) j["published_year"] = *a.published_year;
  return j.dump();
}

std::string summary_to_json(const SummaryRecord& r) {
  ordered_json j;
  j["article_id"] = r.article_id;
  j["model_id"] = r.model_id;
  j["alignment"] = std::string(to_string(r.alignment));
  j["text"] = r.text;
  if (r.prompt_hash) j["prompt_hash"] = *r.prompt_hash;
  return j.dump();
}

// ---------------------------------------------------------------------------

void Corpus::add_article(Article article) {
  if (article.article_id.empty()) throw ValidationError("empty article_id");
  if (!topics_.contains(article.topic))
    throw ValidationError("unknown topic \"" + article.topic + "\"");
  if (count_words(article.text) == 0)
    throw ValidationError("article " + article.article_id + " has empty text");
  if (articles_.count(article.article_id))
    throw ValidationError("duplicate article_id \"" + article.article_id + "\"");
  auto id = article.article_id;
  articles_.emplace(std::move(id), std::move(article));
}

void Corpus::add_summary(SummaryRecord record) {
  if (summaries_.count(record.key()))
    throw ValidationError("duplicate summary (" + record.article_id + ", " + record.model_id +
                          ", " + std::string(to_string(record.alignment)) + ")");
  upsert_summary(std::move(record));
}

void Corpus::upsert_summary(SummaryRecord record) {
  if (!find_article(record.article_id))
    throw ValidationError("summary references unknown article_id \"" + record.article_id + "\"");
  if (record.model_id.empty()) throw ValidationError("empty model_id");
  record.word_count = count_words(record.text);
  auto key = record.key();
  summaries_.insert_or_assign(std::move(key), std::move(record));
}

IngestReport Corpus::ingest_articles(std::istream& in) {
  IngestReport report;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      auto article = parse_article_line(line, topics_);
      if (articles_.count(article.article_id)) {
        report.duplicate_lines.push_back(lineno);
        continue;
      }
      add_article(std::move(article));
      ++report.accepted;
    } catch (const ValidationError& e) {
      report.errors.push_back({lineno, e.what()});
    }
  }
  return report;
}

IngestReport Corpus::ingest_summaries(std::istream& in) {
  IngestReport report;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      auto record = parse_summary_line(line);
      if (summaries_.count(record.key())) {
        report.duplicate_lines.push_back(lineno);
        continue;
      }
      add_summary(std::move(record));
      ++report.accepted;
    } catch (const ValidationError& e) {
      report.errors.push_back({lineno, e.what()});
    }
  }
  return report;
}

const Article* Corpus::find_article(std::string_view article_id) const {
  auto it = articles_.find(article_id);
  return it == articles_.end() ? nullptr : &it->second;
}

const SummaryRecord* Corpus::find_summary(const SummaryKey& key) const {
  auto it = summaries_.find(key);
  return it == summaries_.end() ? nullptr : &it->second;
}

const std::string& Corpus::topic_of(const SummaryRecord& record) const {
  const auto* article = find_article(record.article_id);
  if (!article) throw MissingDataError("no article \"" + record.article_id + "\"");
  return article->topic;
}

std::vector<SummaryRecord> Corpus::select(const SummaryFilter& filter) const {
  if (filter.topic && !topics_.contains(*filter.topic))
    throw ValidationError("unknown topic \"" + *filter.topic + "\"");
  if (filter.model_id) {
    auto models = model_ids();
    if (!std::binary_search(models.begin(), models.end(), *filter.model_id))
      throw ValidationError("unknown model_id \"" + *filter.model_id + "\"");
  }
  std::vector<SummaryRecord> out;
  for (const auto& [key, record] : summaries_) {
    if (filter.model_id && key.model_id != *filter.model_id) continue;
    if (filter.alignment && key.alignment != *filter.alignment) continue;
    if (filter.topic && topic_of(record) != *filter.topic) continue;
    out.push_back(record);
  }
  return out;
}

std::vector<std::string> Corpus::model_ids() const {
  std::set<std::string> ids;
  for (const auto& [key, record] : summaries_) ids.insert(key.model_id);
  return {ids.begin(), ids.end()};
}

void Corpus::write_articles(std::ostream& out) const {
  for (const auto& [id, a] : articles_) out << article_to_json(a) << '\n';
}

void Corpus::write_summaries(std::ostream& out) const {
  for (const auto& [key, r] : summaries_) out << summary_to_json(r) << '\n';
}

// ---------------------------------------------------------------------------

CorpusStats compute_stats(const Corpus& corpus, const std::optional<std::string>& topic) {
  if (corpus.empty()) throw MissingDataError("corpus is empty");
  if (topic && !corpus.topics().contains(*topic))
    throw ValidationError("unknown topic \"" + *topic + "\"");

  struct Acc {
    std::size_t n = 0;
    double words = 0.0;
    double sentences = 0.0;
  };
  std::map<std::string, Acc> per_topic;
  CorpusStats stats;
  for (const auto& [id, a] : corpus.articles()) {
    if (topic && a.topic != *topic) continue;
    auto& acc = per_topic[a.topic];
    ++acc.n;
    acc.words += static_cast<double>(count_words(a.text));
    acc.sentences += static_cast<double>(count_sentences(a.text));
    if (a.published_year) ++stats.articles_per_year[*a.published_year];
  }
  if (per_topic.empty()) throw MissingDataError("no articles for topic \"" + *topic + "\"");

  for (const auto& t : corpus.topics().topics()) {
    auto it = per_topic.find(t);
    if (it == per_topic.end()) continue;
    const auto& acc = it->second;
    stats.topics.push_back({t, acc.n, acc.words / static_cast<double>(acc.n),
                            acc.sentences / static_cast<double>(acc.n)});
  }

  std::map<std::pair<std::string, Alignment>, Acc> per_cell;
  for (const auto& [key, r] : corpus.summaries()) {
    if (topic && corpus.topic_of(r) != *topic) continue;
    auto& acc = per_cell[{key.model_id, key.alignment}];
    ++acc.n;
    acc.words += static_cast<double>(r.word_count);
  }
  for (const auto& [cell, acc] : per_cell) {
    stats.summaries.push_back(
        {cell.first, cell.second, acc.n, acc.words / static_cast<double>(acc.n)});
  }
  return stats;
}

// ---------------------------------------------------------------------------

Workspace::Workspace(std::filesystem::path root) : root_(std::move(root)) {}

Corpus Workspace::load() const {
  TopicRegistry topics;
  if (std::filesystem::exists(topics_path())) topics = TopicRegistry::load(topics_path());
  Corpus corpus(std::move(topics));

  if (std::ifstream in(articles_path()); in) {
    auto report = corpus.ingest_articles(in);
    if (!report.errors.empty())
      throw ValidationError(articles_path().string() + ":" +
                            std::to_string(report.errors.front().line) + ": " +
                            report.errors.front().message);
    if (!report.duplicate_lines.empty())
      throw ValidationError(articles_path().string() + ":" +
                            std::to_string(report.duplicate_lines.front()) +
                            ": duplicate article_id");
  }
  if (std::ifstream in(summaries_path()); in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      try {
        corpus.upsert_summary(parse_summary_line(line));
      } catch (const ValidationError& e) {
        throw ValidationError(summaries_path().string() + ":" + std::to_string(lineno) + ": " +
                              e.what());
      }
    }
  }
  return corpus;
}

void Workspace::save(const Corpus& corpus) const {
  std::filesystem::create_directories(root_);
  std::ostringstream articles;
  corpus.write_articles(articles);
  std::ostringstream summaries;
  corpus.write_summaries(summaries);
  write_file_atomic(articles_path(), articles.str());
  write_file_atomic(summaries_path(), summaries.str());
  if (!std::filesystem::exists(topics_path())) corpus.topics().save(topics_path());
}

IngestReport Workspace::ingest(const std::filesystem::path& file, RecordKind kind) const {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + file.string());
  auto guard = lock();
  auto corpus = load();
  auto report = kind == RecordKind::Articles ? corpus.ingest_articles(in)
                                             : corpus.ingest_summaries(in);
  if (report.accepted > 0) save(corpus);
  return report;
}

void Workspace::append_summary(const SummaryRecord& record) const {
  std::ofstream out(summaries_path(), std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to " + summaries_path().string());
  out << summary_to_json(record) << '\n';
  out.flush();
}

Workspace::Lock::Lock(const std::filesystem::path& lock_file) {
  std::filesystem::create_directories(lock_file.parent_path());
  fd_ = ::open(lock_file.c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open lock file " + lock_file.string());
  if (::flock(fd_, LOCK_EX) != 0) {
    ::close(fd_);
    throw std::runtime_error("cannot lock " + lock_file.string());
  }
}

Workspace::Lock::~Lock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace polaudit
