#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "polaudit/corpus.hpp"

namespace polaudit {

// The stopword list compiled in from data/stopwords_en.txt.
const std::vector<std::string>& default_stopwords();

// Lowercasing word tokenizer. Punctuation separates tokens except '+' and
// '-' inside or trailing a word ("lgbtq+", "pro-life"); apostrophes are
// dropped so contractions stay one token. Bytes outside ASCII are kept as
// word characters, apart from the Unicode general-punctuation block.
class Tokenizer {
 public:
  Tokenizer();
  Tokenizer(std::unordered_set<std::string> stopwords, bool stem);

  // One stopword per line; '#' starts a comment line.
  static Tokenizer from_stopword_file(const std::filesystem::path& path, bool stem);

  std::vector<std::string> tokenize(std::string_view text) const;

  bool stemming() const { return stem_; }
  bool is_stopword(std::string_view token) const;

 private:
  std::unordered_set<std::string> stopwords_;
  bool stem_ = false;
};

// Strips plural 's' and gerund "ing" from long enough words.
std::string light_stem(std::string token);

struct TokenDistribution {
  std::string corpus_label;
  std::map<std::string, std::uint64_t, std::less<>> counts;
  std::uint64_t total = 0;

  std::uint64_t count(std::string_view token) const;
  double freq(std::string_view token) const;
};

// Unigram distribution over the concatenated tokenized texts. Throws
// MissingDataError("empty distribution") when no token survives.
TokenDistribution distribution(std::span<const SummaryRecord> records, const Tokenizer& tokenizer,
                               std::string label = {});
TokenDistribution distribution_of_texts(std::span<const std::string> texts,
                                        const Tokenizer& tokenizer, std::string label = {});

struct BiasEntry {
  std::string token;
  double score = 0.0;  // freq_rep - freq_dem
  std::uint64_t count_dem = 0;
  std::uint64_t count_rep = 0;
};

struct BiasTable {
  std::vector<BiasEntry> entries;  // every scored token, sorted by token
  std::vector<std::string> top_dem;  // most negative first
  std::vector<std::string> top_rep;  // most positive first
  std::size_t n = 0;
  std::uint64_t vocab_threshold = 0;
  bool truncated = false;  // fewer than n scored tokens

  const BiasEntry* find(std::string_view token) const;
  double score(std::string_view token) const;  // 0 for unscored tokens
};

// Ranks entries into top_dem / top_rep: by score, then lexicographically.
void rank_top_tokens(BiasTable& table);

// Scores every token of the union vocabulary whose combined count reaches
// vocab_threshold. Positive scores lean Republican, negative Democrat.
BiasTable bias_table(const TokenDistribution& dem, const TokenDistribution& rep, std::size_t n,
                     std::uint64_t vocab_threshold);

}  // namespace polaudit
