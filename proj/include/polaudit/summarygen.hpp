#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polaudit/corpus.hpp"

namespace polaudit {

inline constexpr std::string_view kArticlePlaceholder = "{article}";

class PromptTemplate {
 public:
  // Throws ValidationError unless the text holds exactly one "{article}".
  PromptTemplate(Alignment alignment, std::string text);

  Alignment alignment() const { return alignment_; }
  const std::string& text() const { return text_; }
  const std::string& prompt_hash() const { return hash_; }

  std::string render(std::string_view article) const;

 private:
  Alignment alignment_;
  std::string text_;
  std::string hash_;
};

class TemplateSet {
 public:
  // Symmetric defaults: the two partisan prompts differ only in the party name.
  static TemplateSet defaults();
  // JSON object {"neutral": "...", "democrat": "...", "republican": "..."}.
  static TemplateSet load(const std::filesystem::path& path);

  TemplateSet(PromptTemplate neutral, PromptTemplate democrat, PromptTemplate republican);

  const PromptTemplate& get(Alignment a) const { return templates_[static_cast<std::size_t>(a)]; }

 private:
  std::array<PromptTemplate, 3> templates_;
};

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 512;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds request_timeout{60'000};
};

// Failure talking to the endpoint; retried up to the policy's attempt limit.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Chat-completion transport. Returns the first choice's message content.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& model, const std::string& prompt,
                               const Decoding& decoding) = 0;
};

// POSTs {model, messages: [{role, content}], temperature, max_tokens} to the
// endpoint URL and reads choices[0].message.content. The bearer credential,
// when given, is sent as an Authorization header and never logged.
class HttpChatClient final : public ChatClient {
 public:
  HttpChatClient(std::string endpoint_url, std::optional<std::string> api_key,
                 std::chrono::milliseconds timeout);

  std::string complete(const std::string& model, const std::string& prompt,
                       const Decoding& decoding) override;

 private:
  std::string base_;
  std::string path_;
  std::optional<std::string> api_key_;
  std::chrono::milliseconds timeout_;
};

std::string chat_request_body(const std::string& model, const std::string& prompt,
                              const Decoding& decoding);
// Throws TransportError on a malformed response body.
std::string parse_chat_response(const std::string& body);

enum class JobStatus { Pending, Done, Failed };

struct GenerationJob {
  std::string article_id;
  std::string model_id;
  Alignment alignment = Alignment::Neutral;
  std::string prompt_hash;
  std::string endpoint;
  Decoding decoding;
  JobStatus status = JobStatus::Pending;
  std::string failure_reason;
  int attempts = 0;
};

struct GenerationConfig {
  std::string model_id;
  std::string endpoint;
  TemplateSet templates = TemplateSet::defaults();
  Decoding decoding;
  RetryPolicy retry;
  std::size_t concurrency = 4;
  std::string credential_env = "POLAUDIT_API_KEY";
  // Restrict generation to these articles; all corpus articles when empty.
  std::vector<std::string> article_ids;
};

struct GenerationCounts {
  std::size_t done = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  std::size_t requests = 0;  // attempts issued, retries included
  std::vector<GenerationJob> failures;
};

// Issues one request (with bounded retries) for every (article, alignment)
// lacking a stored summary produced with the same prompt hash. Successful
// outputs are upserted into `corpus` and passed to `on_stored` under a single
// writer lock.
GenerationCounts generate(Corpus& corpus, const GenerationConfig& config, ChatClient& client,
                          const std::function<void(const SummaryRecord&)>& on_stored = {});

// Workspace variant: talks HTTP, journals each stored summary as it arrives
// and rewrites the summary file in sorted form at the end.
GenerationCounts generate(const Workspace& workspace, const GenerationConfig& config);

struct SummaryLengthRow {
  std::string model_id;
  std::optional<double> democrat;
  std::optional<double> republican;
  std::optional<double> neutral;
  std::optional<double> aggregate;  // record-weighted mean over all three alignments
};

// Mean words per summary for each model and alignment. Empty cells stay
// unset rather than reading as zero.
std::vector<SummaryLengthRow> summary_length_report(const Corpus& corpus);

}  // namespace polaudit
