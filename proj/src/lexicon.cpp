#include "polaudit/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "polaudit/errors.hpp"
#include "stopwords_data.hpp"

namespace polaudit {

namespace {

std::vector<std::string> parse_stopword_lines(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(b, e - b + 1));
  }
  return words;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words = [] {
    std::istringstream in{std::string(kDefaultStopwords)};
    return parse_stopword_lines(in);
  }();
  return words;
}

Tokenizer::Tokenizer()
    : stopwords_(default_stopwords().begin(), default_stopwords().end()) {}

Tokenizer::Tokenizer(std::unordered_set<std::string> stopwords, bool stem)
    : stopwords_(std::move(stopwords)), stem_(stem) {}

Tokenizer Tokenizer::from_stopword_file(const std::filesystem::path& path, bool stem) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stopword file " + path.string());
  auto words = parse_stopword_lines(in);
  return Tokenizer({words.begin(), words.end()}, stem);
}

bool Tokenizer::is_stopword(std::string_view token) const {
  return stopwords_.count(std::string(token)) != 0;
}

std::string light_stem(std::string token) {
  if (token.size() >= 6 && ends_with(token, "ing")) {
    token.resize(token.size() - 3);
  } else if (token.size() >= 4 && token.back() == 's' && !ends_with(token, "ss") &&
             !ends_with(token, "us") && !ends_with(token, "is")) {
    token.pop_back();
  }
  return token;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::string cur;

  auto flush = [&] {
    std::size_t b = 0;
    while (b < cur.size() && (cur[b] == '+' || cur[b] == '-')) ++b;
    std::size_t e = cur.size();
    while (e > b && cur[e - 1] == '-') --e;
    // a run of '+' only survives behind a word character ("lgbtq+")
    std::string tok = cur.substr(b, e - b);
    cur.clear();
    if (tok.empty() || tok.find_first_not_of("+-") == std::string::npos) return;
    if (stopwords_.count(tok)) return;
    if (stem_) {
      tok = light_stem(std::move(tok));
      if (stopwords_.count(tok)) return;
    }
    tokens.push_back(std::move(tok));
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) {
        cur.push_back(static_cast<char>(std::tolower(c)));
      } else if (c == '+' || c == '-') {
        cur.push_back(static_cast<char>(c));
      } else if (c == '\'') {
        // contraction: join
      } else {
        flush();
      }
      continue;
    }
    // U+2000..U+203F (general punctuation) is E2 80 xx in UTF-8.
    if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80) {
      auto third = static_cast<unsigned char>(text[i + 2]);
      i += 2;
      if (third == 0x99) continue;  // right single quote used as apostrophe
      flush();
      continue;
    }
    cur.push_back(static_cast<char>(c));
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------------------

std::uint64_t TokenDistribution::count(std::string_view token) const {
  auto it = counts.find(token);
  return it == counts.end() ? 0 : it->second;
}

double TokenDistribution::freq(std::string_view token) const {
  if (total == 0) return 0.0;
  return static_cast<double>(count(token)) / static_cast<double>(total);
}

TokenDistribution distribution_of_texts(std::span<const std::string> texts,
                                        const Tokenizer& tokenizer, std::string label) {
  TokenDistribution dist;
  dist.corpus_label = std::move(label);
  for (const auto& text : texts) {
    for (auto& tok : tokenizer.tokenize(text)) {
      ++dist.counts[std::move(tok)];
      ++dist.total;
    }
  }
  if (dist.total == 0) throw MissingDataError("empty distribution");
  return dist;
}

TokenDistribution distribution(std::span<const SummaryRecord> records, const Tokenizer& tokenizer,
                               std::string label) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(r.text);
  return distribution_of_texts(texts, tokenizer, std::move(label));
}

// ---------------------------------------------------------------------------

const BiasEntry* BiasTable::find(std::string_view token) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), token,
                             [](const BiasEntry& e, std::string_view t) { return e.token < t; });
  return (it != entries.end() && it->token == token) ? &*it : nullptr;
}

double BiasTable::score(std::string_view token) const {
  const auto* e = find(token);
  return e ? e->score : 0.0;
}

void rank_top_tokens(BiasTable& table) {
  std::vector<const BiasEntry*> order;
  order.reserve(table.entries.size());
  for (const auto& e : table.entries) order.push_back(&e);
  const std::size_t k = std::min(table.n, order.size());
  table.truncated = order.size() < table.n;

  auto take = [&](auto cmp) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      cmp);
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(order[i]->token);
    return out;
  };
  table.top_dem = take([](const BiasEntry* a, const BiasEntry* b) {
    return a->score != b->score ? a->score < b->score : a->token < b->token;
  });
  table.top_rep = take([](const BiasEntry* a, const BiasEntry* b) {
    return a->score != b->score ? a->score > b->score : a->token < b->token;
  });
}

BiasTable bias_table(const TokenDistribution& dem, const TokenDistribution& rep, std::size_t n,
                     std::uint64_t vocab_threshold) {
  if (dem.total == 0 || rep.total == 0) throw MissingDataError("empty distribution");
  if (n < 1) throw ValidationError("N must be at least 1");

  BiasTable table;
  table.n = n;
  table.vocab_threshold = vocab_threshold;
  const double dem_total = static_cast<double>(dem.total);
  const double rep_total = static_cast<double>(rep.total);

  // Merge the two sorted count maps.
  auto d = dem.counts.begin();
  auto r = rep.counts.begin();
  while (d != dem.counts.end() || r != rep.counts.end()) {
    BiasEntry e;
    if (r == rep.counts.end() || (d != dem.counts.end() && d->first < r->first)) {
      e = {d->first, 0.0, d->second, 0};
      ++d;
    } else if (d == dem.counts.end() || r->first < d->first) {
      e = {r->first, 0.0, 0, r->second};
      ++r;
    } else {
      e = {d->first, 0.0, d->second, r->second};
      ++d;
      ++r;
    }
    if (e.count_dem + e.count_rep < vocab_threshold) continue;
    e.score = static_cast<double>(e.count_rep) / rep_total -
              static_cast<double>(e.count_dem) / dem_total;
    table.entries.push_back(std::move(e));
  }
  rank_top_tokens(table);
  return table;
}

}  // namespace polaudit
