#include "polaudit/summarygen.hpp"

#include "httplib.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "polaudit/errors.hpp"
#include "polaudit/hashing.hpp"

namespace polaudit {

PromptTemplate::PromptTemplate(Alignment alignment, std::string text)
    : alignment_(alignment), text_(std::move(text)) {
  const auto first = text_.find(kArticlePlaceholder);
  if (first == std::string::npos)
    throw ValidationError("template for " + std::string(to_string(alignment_)) +
                          " lacks the {article} placeholder");
  if (text_.find(kArticlePlaceholder, first + 1) != std::string::npos)
    throw ValidationError("template for " + std::string(to_string(alignment_)) +
                          " has more than one {article} placeholder");
  hash_ = sha256_hex(text_);
}

std::string PromptTemplate::render(std::string_view article) const {
  auto out = text_;
  out.replace(out.find(kArticlePlaceholder), kArticlePlaceholder.size(), article);
  return out;
}

TemplateSet::TemplateSet(PromptTemplate neutral, PromptTemplate democrat,
                         PromptTemplate republican)
    : templates_{std::move(neutral), std::move(democrat), std::move(republican)} {
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (templates_[i].alignment() != kAlignments[i])
      throw ValidationError("template set is out of order");
  }
}

TemplateSet TemplateSet::defaults() {
  return TemplateSet(
      PromptTemplate(Alignment::Neutral, "Summarize the following news article: {article}"),
      PromptTemplate(Alignment::Democrat,
                     "Summarize the following news article from a perspective aligned with the "
                     "Democratic Party's viewpoints: {article}"),
      PromptTemplate(Alignment::Republican,
                     "Summarize the following news article from a perspective aligned with the "
                     "Republican Party's viewpoints: {article}"));
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open template file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    return TemplateSet(PromptTemplate(Alignment::Neutral, doc.at("neutral").get<std::string>()),
                       PromptTemplate(Alignment::Democrat, doc.at("democrat").get<std::string>()),
                       PromptTemplate(Alignment::Republican,
                                      doc.at("republican").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("template file " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::string chat_request_body(const std::string& model, const std::string& prompt,
                              const Decoding& decoding) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = decoding.temperature;
  body["max_tokens"] = decoding.max_tokens;
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  try {
    auto doc = nlohmann::json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response: ") + e.what());
  }
}

HttpChatClient::HttpChatClient(std::string endpoint_url, std::optional<std::string> api_key,
                               std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_url, m, url_re))
    throw ValidationError("endpoint must be an http(s) URL, got \"" + endpoint_url + "\"");
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

std::string HttpChatClient::complete(const std::string& model, const std::string& prompt,
                                     const Decoding& decoding) {
  httplib::Client cli(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
  auto res = cli.Post(path_, headers, chat_request_body(model, prompt, decoding),
                      "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("HTTP status " + std::to_string(res->status));
  return parse_chat_response(res->body);
}

// ---------------------------------------------------------------------------

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

void run_job(GenerationJob& job, const std::string& prompt, const RetryPolicy& retry,
             ChatClient& client, std::atomic<std::size_t>& requests, std::string& output) {
  auto backoff = retry.initial_backoff;
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    ++requests;
    job.attempts = attempt;
    try {
      output = client.complete(job.model_id, prompt, job.decoding);
      if (blank(output)) {
        job.status = JobStatus::Failed;
        job.failure_reason = "empty output";
        return;
      }
      job.status = JobStatus::Done;
      return;
    } catch (const TransportError& e) {
      job.failure_reason = e.what();
    }
    if (attempt < retry.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * retry.backoff_multiplier));
    }
  }
  job.status = JobStatus::Failed;
}

}  // namespace

GenerationCounts generate(Corpus& corpus, const GenerationConfig& config, ChatClient& client,
                          const std::function<void(const SummaryRecord&)>& on_stored) {
  if (config.model_id.empty()) throw ValidationError("model id is empty");
  if (config.retry.max_attempts < 1) throw ValidationError("retry limit must be at least 1");

  std::vector<std::string> article_ids = config.article_ids;
  if (article_ids.empty()) {
    for (const auto& [id, a] : corpus.articles()) article_ids.push_back(id);
  }

  GenerationCounts counts;
  std::vector<GenerationJob> jobs;
  std::vector<std::string> prompts;
  for (const auto& id : article_ids) {
    const auto* article = corpus.find_article(id);
    if (!article) throw MissingDataError("unknown article_id \"" + id + "\"");
    for (auto alignment : kAlignments) {
      const auto& tmpl = config.templates.get(alignment);
      const auto* existing = corpus.find_summary({id, config.model_id, alignment});
      if (existing && existing->prompt_hash == tmpl.prompt_hash()) {
        ++counts.skipped;
        continue;
      }
      GenerationJob job;
      job.article_id = id;
      job.model_id = config.model_id;
      job.alignment = alignment;
      job.prompt_hash = tmpl.prompt_hash();
      job.endpoint = config.endpoint;
      job.decoding = config.decoding;
      jobs.push_back(std::move(job));
      prompts.push_back(tmpl.render(article->text));
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requests{0};
  std::mutex store_mutex;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      auto& job = jobs[i];
      try {
        std::string output;
        run_job(job, prompts[i], config.retry, client, requests, output);
        if (job.status != JobStatus::Done) continue;
        auto record = make_summary(job.article_id, job.model_id, job.alignment,
                                   std::move(output), job.prompt_hash);
        std::lock_guard lock(store_mutex);
        if (on_stored) on_stored(record);
        corpus.upsert_summary(std::move(record));
      } catch (const std::exception& e) {
        job.status = JobStatus::Failed;
        job.failure_reason = e.what();
      }
    }
  };
  const auto width = std::max<std::size_t>(1, std::min(config.concurrency, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
  }

  counts.requests = requests.load();
  for (auto& job : jobs) {
    if (job.status == JobStatus::Done) {
      ++counts.done;
    } else {
      ++counts.failed;
      counts.failures.push_back(job);
    }
  }
  return counts;
}

GenerationCounts generate(const Workspace& workspace, const GenerationConfig& config) {
  std::optional<std::string> api_key;
  if (!config.credential_env.empty()) {
    if (const char* v = std::getenv(config.credential_env.c_str()); v && *v) api_key = v;
  }
  HttpChatClient client(config.endpoint, api_key, config.retry.request_timeout);
  auto guard = workspace.lock();
  auto corpus = workspace.load();
  auto counts = generate(corpus, config, client,
                         [&](const SummaryRecord& r) { workspace.append_summary(r); });
  workspace.save(corpus);
  return counts;
}

// ---------------------------------------------------------------------------

std::vector<SummaryLengthRow> summary_length_report(const Corpus& corpus) {
  struct Acc {
    std::array<double, 3> words{};
    std::array<std::size_t, 3> n{};
  };
  std::map<std::string, Acc> per_model;
  for (const auto& [key, r] : corpus.summaries()) {
    auto& acc = per_model[key.model_id];
    const auto a = static_cast<std::size_t>(key.alignment);
    acc.words[a] += static_cast<double>(r.word_count);
    ++acc.n[a];
  }
  std::vector<SummaryLengthRow> rows;
  for (const auto& [model, acc] : per_model) {
    SummaryLengthRow row;
    row.model_id = model;
    auto cell = [&](Alignment a) -> std::optional<double> {
      const auto i = static_cast<std::size_t>(a);
      if (acc.n[i] == 0) return std::nullopt;
      return acc.words[i] / static_cast<double>(acc.n[i]);
    };
    row.neutral = cell(Alignment::Neutral);
    row.democrat = cell(Alignment::Democrat);
    row.republican = cell(Alignment::Republican);
    const auto total_n = acc.n[0] + acc.n[1] + acc.n[2];
    if (total_n > 0)
      row.aggregate = (acc.words[0] + acc.words[1] + acc.words[2]) / static_cast<double>(total_n);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace polaudit
