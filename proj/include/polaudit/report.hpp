#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "polaudit/corpus.hpp"
#include "polaudit/lexicon.hpp"
#include "polaudit/monoculture.hpp"
#include "polaudit/separability.hpp"
#include "polaudit/summarygen.hpp"

namespace polaudit {

inline constexpr std::string_view kVersion = "0.3.0";

// ---- CSV -----------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 quoting where needed; '\n' line ends.
std::string to_csv(const Table& table);
// Throws ValidationError on ragged rows or unterminated quotes.
Table parse_csv(std::string_view text);

// Shortest text that parses back to the same double.
std::string format_number(double value);
double parse_number(std::string_view text);
// Two decimals, for human-facing renderings.
std::string format_fixed2(double value);

Table matrix_table(const SquareMatrix& m, const std::string& corner);
SquareMatrix matrix_from_table(const Table& table);

// Rows: topics, then an "Averages" row. Columns: topic, one per model, mean,
// max_magnitude. Missing cells are empty fields.
Table polarization_table(const PolarizationReport& report);
PolarizationReport polarization_from_table(const Table& table);

// Columns: token, B, count_dem, count_rep. The top_dem rows come first (most
// negative score first), then the top_rep rows (most positive first).
Table bias_csv_table(const BiasTable& table);
Table separability_table(std::span<const SeparabilityResult> results);
Table topic_stats_table(const CorpusStats& stats);
Table summary_length_table(std::span<const SummaryLengthRow> rows);

nlohmann::ordered_json stats_json(const CorpusStats& stats,
                                  std::span<const SummaryLengthRow> lengths);
nlohmann::ordered_json bias_json(const BiasTable& table);

// Fixed-width text rendering of the polarization grid: two decimals, a "D"
// or "R" tag on negative/positive cells, '*' on each column's extreme.
std::string polarization_text(const PolarizationReport& report);

// ---- SVG -----------------------------------------------------------------

enum class Palette { Diverging };

// Nine fills, lowest value first.
const std::array<std::string_view, 9>& palette_colors(Palette palette);

// Heatmap with one <rect class="cell"> per entry and the value overlaid with
// two decimals. Fills come from a linear 9-step scale between the matrix
// minimum and maximum, both annotated. Output bytes depend only on the input.
std::string render_heatmap(const SquareMatrix& matrix, Palette palette = Palette::Diverging,
                           std::string_view title = {});

// ---- audit ---------------------------------------------------------------

struct AuditRunConfig {
  std::filesystem::path workspace = ".";
  std::filesystem::path output_dir = "audit_out";
  std::vector<std::string> topics;  // empty: every declared topic with articles
  std::vector<std::string> models;  // empty: every model in the store
  std::size_t n = 20;
  std::uint64_t vocab_threshold = 5;
  std::string featurizer = "hashed";  // or "embeddings"
  std::optional<std::filesystem::path> embeddings_file;
  std::uint64_t seed = 0;
  std::vector<std::string> formats = {"csv", "svg"};
  std::optional<std::filesystem::path> stopwords_file;
  bool stem = false;
  std::uint32_t hashed_dims = 1u << 18;
};

AuditRunConfig load_audit_config(const std::filesystem::path& path);
AuditRunConfig audit_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json audit_config_to_json(const AuditRunConfig& config);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string kind;
  std::string sha256;
};

struct Manifest {
  nlohmann::ordered_json config;
  std::string corpus_sha256;
  std::vector<ManifestEntry> files;
  nlohmann::ordered_json metrics;
};

nlohmann::ordered_json manifest_json(const Manifest& manifest);

// Loads the workspace corpus, computes every table and matrix, writes them to
// output_dir together with manifest.json, and returns the manifest. Throws
// MissingDataError listing each (topic, model) lacking an alignment.
Manifest run_audit(const AuditRunConfig& config);

// Makes a model or topic id safe to use in a file name.
std::string file_stem(std::string_view id);

}  // namespace polaudit
