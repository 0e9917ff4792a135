#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "polaudit/errors.hpp"
#include "polaudit/report.hpp"

namespace polaudit {

namespace {

constexpr std::string_view kAveragesRow = "Averages";

void append_field(std::string& out, const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    out += field;
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out.push_back(',');
      append_field(out, fields[i]);
    }
    out.push_back('\n');
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out;
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool row_open = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    row_open = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      fields.push_back(std::move(field));
      field.clear();
      lines.push_back(std::move(fields));
      fields.clear();
      row_open = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw ValidationError("CSV: unterminated quoted field");
  if (row_open) {
    fields.push_back(std::move(field));
    lines.push_back(std::move(fields));
  }
  if (lines.empty()) throw ValidationError("CSV: no header");
  Table t;
  t.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size())
      throw ValidationError("CSV: row " + std::to_string(i) + " has " +
                            std::to_string(lines[i].size()) + " fields, header has " +
                            std::to_string(t.header.size()));
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError("not a number: \"" + std::string(text) + "\"");
  return v;
}

std::string format_fixed2(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

// ---------------------------------------------------------------------------

Table matrix_table(const SquareMatrix& m, const std::string& corner) {
  Table t;
  t.header.push_back(corner);
  t.header.insert(t.header.end(), m.labels.begin(), m.labels.end());
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<std::string> row{m.labels[i]};
    for (double v : m.cells[i]) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

SquareMatrix matrix_from_table(const Table& table) {
  SquareMatrix m;
  if (table.header.empty()) throw ValidationError("matrix CSV has no header");
  m.labels.assign(table.header.begin() + 1, table.header.end());
  if (table.rows.size() != m.labels.size()) throw ValidationError("matrix CSV is not square");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row[0] != m.labels[i]) throw ValidationError("matrix CSV row/column labels differ");
    std::vector<double> cells;
    for (std::size_t j = 1; j < row.size(); ++j) cells.push_back(parse_number(row[j]));
    m.cells.push_back(std::move(cells));
  }
  return m;
}

Table polarization_table(const PolarizationReport& report) {
  Table t;
  t.header.push_back("topic");
  t.header.insert(t.header.end(), report.models.begin(), report.models.end());
  t.header.push_back("mean");
  t.header.push_back("max_magnitude");
  for (std::size_t i = 0; i < report.topics.size(); ++i) {
    std::vector<std::string> row{report.topics[i]};
    for (const auto& c : report.cells[i]) row.push_back(opt_number(c));
    row.push_back(format_number(report.topic_means[i]));
    row.push_back(format_number(report.topic_max_magnitude[i]));
    t.rows.push_back(std::move(row));
  }
  std::vector<std::string> avg{std::string(kAveragesRow)};
  for (double m : report.model_means) avg.push_back(format_number(m));
  avg.push_back(format_number(report.grand_mean));
  avg.push_back("");
  t.rows.push_back(std::move(avg));
  return t;
}

PolarizationReport polarization_from_table(const Table& table) {
  if (table.header.size() < 3 || table.header.front() != "topic")
    throw ValidationError("not a polarization table");
  std::vector<std::string> models(table.header.begin() + 1, table.header.end() - 2);
  std::vector<std::string> topics;
  std::vector<std::vector<std::optional<double>>> cells;
  for (const auto& row : table.rows) {
    if (row.front() == kAveragesRow) continue;
    topics.push_back(row.front());
    std::vector<std::optional<double>> r;
    for (std::size_t j = 1; j <= models.size(); ++j) {
      if (row[j].empty())
        r.emplace_back();
      else
        r.emplace_back(parse_number(row[j]));
    }
    cells.push_back(std::move(r));
  }
  return polarization_report(std::move(topics), std::move(models), std::move(cells), true);
}

Table bias_csv_table(const BiasTable& table) {
  Table t;
  t.header = {"token", "B", "count_dem", "count_rep"};
  auto emit = [&](const std::vector<std::string>& tokens) {
    for (const auto& tok : tokens) {
      const auto* e = table.find(tok);
      t.rows.push_back({tok, format_number(e->score), std::to_string(e->count_dem),
                        std::to_string(e->count_rep)});
    }
  };
  emit(table.top_dem);
  emit(table.top_rep);
  return t;
}

Table separability_table(std::span<const SeparabilityResult> results) {
  Table t;
  std::size_t folds = 0;
  for (const auto& r : results) folds = std::max(folds, r.fold_accuracies.size());
  t.header = {"topic", "model_id", "contrast"};
  for (std::size_t f = 0; f < folds; ++f) t.header.push_back("fold" + std::to_string(f + 1));
  t.header.insert(t.header.end(), {"mean_accuracy", "n_neutral", "n_aligned", "seed"});
  for (const auto& r : results) {
    std::vector<std::string> row{r.topic, r.model_id,
                                 r.contrast ? std::string(to_string(*r.contrast)) : ""};
    for (std::size_t f = 0; f < folds; ++f)
      row.push_back(f < r.fold_accuracies.size() ? format_number(r.fold_accuracies[f]) : "");
    row.push_back(format_number(r.mean_accuracy));
    row.push_back(std::to_string(r.n_neutral));
    row.push_back(std::to_string(r.n_aligned));
    row.push_back(std::to_string(r.seed));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table topic_stats_table(const CorpusStats& stats) {
  Table t;
  t.header = {"topic", "article_count", "mean_words_per_article", "mean_sentences_per_article"};
  for (const auto& s : stats.topics) {
    t.rows.push_back({s.topic, std::to_string(s.article_count),
                      format_number(s.mean_words_per_article),
                      format_number(s.mean_sentences_per_article)});
  }
  return t;
}

Table summary_length_table(std::span<const SummaryLengthRow> rows) {
  Table t;
  t.header = {"model_id", "pro_democratic", "pro_republican", "neutral", "aggregate"};
  for (const auto& r : rows) {
    t.rows.push_back({r.model_id, opt_number(r.democrat), opt_number(r.republican),
                      opt_number(r.neutral), opt_number(r.aggregate)});
  }
  return t;
}

nlohmann::ordered_json stats_json(const CorpusStats& stats,
                                  std::span<const SummaryLengthRow> lengths) {
  nlohmann::ordered_json j;
  j["topics"] = nlohmann::ordered_json::array();
  for (const auto& s : stats.topics) {
    nlohmann::ordered_json t;
    t["topic"] = s.topic;
    t["article_count"] = s.article_count;
    t["mean_words_per_article"] = s.mean_words_per_article;
    t["mean_sentences_per_article"] = s.mean_sentences_per_article;
    j["topics"].push_back(std::move(t));
  }
  j["articles_per_year"] = nlohmann::ordered_json::object();
  for (const auto& [year, count] : stats.articles_per_year)
    j["articles_per_year"][std::to_string(year)] = count;
  j["summaries"] = nlohmann::ordered_json::array();
  for (const auto& s : stats.summaries) {
    nlohmann::ordered_json c;
    c["model_id"] = s.model_id;
    c["alignment"] = std::string(to_string(s.alignment));
    c["summary_count"] = s.summary_count;
    c["mean_words_per_summary"] = s.mean_words_per_summary;
    j["summaries"].push_back(std::move(c));
  }
  j["summary_lengths"] = nlohmann::ordered_json::array();
  for (const auto& r : lengths) {
    nlohmann::ordered_json row;
    row["model_id"] = r.model_id;
    row["pro_democratic"] = opt_json(r.democrat);
    row["pro_republican"] = opt_json(r.republican);
    row["neutral"] = opt_json(r.neutral);
    row["aggregate"] = opt_json(r.aggregate);
    j["summary_lengths"].push_back(std::move(row));
  }
  return j;
}

nlohmann::ordered_json bias_json(const BiasTable& table) {
  nlohmann::ordered_json j;
  j["n"] = table.n;
  j["vocab_threshold"] = table.vocab_threshold;
  j["truncated"] = table.truncated;
  auto list = [&](const std::vector<std::string>& tokens) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& tok : tokens) {
      const auto* e = table.find(tok);
      nlohmann::ordered_json row;
      row["token"] = tok;
      row["B"] = e->score;
      row["count_dem"] = e->count_dem;
      row["count_rep"] = e->count_rep;
      arr.push_back(std::move(row));
    }
    return arr;
  };
  j["top_dem"] = list(table.top_dem);
  j["top_rep"] = list(table.top_rep);
  return j;
}

std::string polarization_text(const PolarizationReport& report) {
  auto tag = [](double v) {
    std::string s = format_fixed2(v);
    if (s != "0.00") s += v < 0 ? " D" : " R";
    return s;
  };
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"Topic"};
  head.insert(head.end(), report.models.begin(), report.models.end());
  head.push_back("Mean");
  head.push_back("Max");
  grid.push_back(head);
  for (std::size_t t = 0; t < report.topics.size(); ++t) {
    std::vector<std::string> row{report.topics[t]};
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      const auto& c = report.cells[t][m];
      std::string s = c ? tag(*c) : "-";
      if (c && report.column_extreme_row[m] == t) s += "*";
      row.push_back(s);
    }
    auto mean = tag(report.topic_means[t]);
    if (report.mean_column_extreme_row == t) mean += "*";
    row.push_back(mean);
    row.push_back(tag(report.topic_max_magnitude[t]));
    grid.push_back(std::move(row));
  }
  std::vector<std::string> avg{"Averages"};
  for (double m : report.model_means) avg.push_back(tag(m));
  avg.push_back(tag(report.grand_mean));
  avg.push_back("");
  grid.push_back(std::move(avg));

  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : grid)
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  std::ostringstream out;
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) line += "  ";
      line += row[j] + std::string(width[j] - row[j].size(), ' ');
    }
    line.erase(line.find_last_not_of(' ') + 1);
    out << line << '\n';
  }
  return out.str();
}

}  // namespace polaudit
