#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <regex>

#include "json.hpp"
#include "polaudit/errors.hpp"
#include "polaudit/report.hpp"
#include "polaudit/synth.hpp"
#include "test_util.hpp"

using namespace polaudit;
using polaudit::testing::TempDir;
using polaudit::testing::read_file;
using polaudit::testing::write_file;

namespace {

// Fill colors of <rect class="cell"> elements keyed by (row, col).
std::map<std::pair<int, int>, std::string> cell_fills(const std::string& svg) {
  static const std::regex re(
      R"re(<rect class="cell" data-row="(\d+)" data-col="(\d+)"[^>]*fill="(#[0-9a-f]{6})")re");
  std::map<std::pair<int, int>, std::string> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it)
    out[{std::stoi((*it)[1]), std::stoi((*it)[2])}] = (*it)[3];
  return out;
}

SynthSpec audit_spec(const std::string& model, std::uint64_t seed, double alpha) {
  SynthSpec s;
  s.model_id = model;
  s.base_vocab = numbered_tokens("w", 150);
  s.dem_markers = numbered_tokens("dem", 8);
  s.rep_markers = numbered_tokens("rep", 8);
  s.injection_rate = 0.3;
  s.neutral_mix = alpha;
  s.doc_length = 25;
  s.docs_per_class = 40;
  s.seed = seed;
  s.topics = {"Abortion", "Immigration"};
  return s;
}

void make_workspace(const std::filesystem::path& root) {
  auto c = generate_synth(audit_spec("synthA", 1, 0.7));
  add_synth(c, audit_spec("synthB", 2, 0.3));
  Workspace ws(root);
  ws.save(c);
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(POLAUDIT_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Csv, QuotingRoundTrip) {
  Table t;
  t.header = {"a", "b,c", "d"};
  t.rows = {{"x", "say \"hi\"", ""}, {"multi\nline", "2", "-0.5"}};
  auto text = to_csv(t);
  auto back = parse_csv(text);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_THROW(parse_csv("a,b\n1\n"), ValidationError);
  EXPECT_THROW(parse_csv("a\n\"open\n"), ValidationError);
  EXPECT_EQ(parse_csv("a,b\r\n1,2\r\n").rows.size(), 1u);
}

TEST(Csv, NumbersRoundTripExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) / (1 + (rng() % 1000));
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
  EXPECT_EQ(format_number(100.0), "100");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_THROW(parse_number("1.0x"), ValidationError);
  EXPECT_EQ(format_fixed2(-2.8265), "-2.83");
  EXPECT_EQ(format_fixed2(-0.001), "0.00");
}

TEST(Csv, MatrixRoundTrip) {
  SquareMatrix m{{"a", "b,1", "c"}, {{100, 1.0 / 3, 25}, {1.0 / 3, 100, 0}, {25, 0, 100}}};
  auto back = matrix_from_table(parse_csv(to_csv(matrix_table(m, "model"))));
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.cells, m.cells);
}

TEST(Csv, PolarizationRoundTrip) {
  auto rep = polarization_report({"Abortion", "Gun Control"}, {"m1", "m2"},
                                 {{-4.30, 1.0 / 7}, {std::nullopt, -9.49}}, true);
  auto table = polarization_table(rep);
  EXPECT_EQ(table.rows.back().front(), "Averages");
  auto back = polarization_from_table(parse_csv(to_csv(table)));
  EXPECT_EQ(back.topics, rep.topics);
  EXPECT_EQ(back.models, rep.models);
  EXPECT_EQ(back.cells, rep.cells);
  EXPECT_EQ(back.topic_means, rep.topic_means);
  EXPECT_EQ(back.model_means, rep.model_means);
}

TEST(Text, PolarizationTagsAndExtremes) {
  auto rep = polarization_report({"A", "B"}, {"m1", "m2"}, {{-4.30, 2.0}, {-1.0, 0.0}});
  auto text = polarization_text(rep);
  EXPECT_NE(text.find("-4.30 D*"), std::string::npos);
  EXPECT_NE(text.find("2.00 R*"), std::string::npos);
  EXPECT_NE(text.find("0.00"), std::string::npos);
  EXPECT_NE(text.find("Averages"), std::string::npos);
}

TEST(Heatmap, SingleCell) {
  SquareMatrix m{{"only"}, {{100}}};
  auto svg = render_heatmap(m);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(cell_fills(svg).size(), 1u);
  EXPECT_NE(svg.find(">100.00</text>"), std::string::npos);
  EXPECT_EQ(svg, render_heatmap(m));
}

TEST(Heatmap, SymmetricCellsShareFill) {
  SquareMatrix m{{"a", "b"}, {{100, 37}, {37, 100}}};
  auto fills = cell_fills(render_heatmap(m));
  ASSERT_EQ(fills.size(), 4u);
  EXPECT_EQ((fills[{0, 1}]), (fills[{1, 0}]));
  EXPECT_NE((fills[{0, 0}]), (fills[{0, 1}]));
}

TEST(Heatmap, DiagonalCarriesPaletteMaximum) {
  SquareMatrix m{{"a", "b", "c", "d"},
                 {{100, 62, 28, 38}, {62, 100, 40, 37}, {28, 40, 100, 38}, {38, 37, 38, 100}}};
  auto svg = render_heatmap(m, Palette::Diverging, "CI & <test>");
  auto fills = cell_fills(svg);
  const std::string top(palette_colors(Palette::Diverging).back());
  for (int i = 0; i < 4; ++i) EXPECT_EQ((fills[{i, i}]), top);
  EXPECT_EQ((fills[{0, 2}]), std::string(palette_colors(Palette::Diverging).front()));
  EXPECT_NE(svg.find("CI &amp; &lt;test&gt;"), std::string::npos);
  EXPECT_NE(svg.find("min 28.00"), std::string::npos);
  EXPECT_NE(svg.find("max 100.00"), std::string::npos);
}

TEST(Heatmap, RejectsBadShapes) {
  EXPECT_THROW(render_heatmap(SquareMatrix{{}, {}}), ValidationError);
  EXPECT_THROW(render_heatmap(SquareMatrix{{"a", "b"}, {{1, 2}}}), ValidationError);
  EXPECT_THROW(render_heatmap(SquareMatrix{{"a", "b"}, {{1, 2}, {3}}}), ValidationError);
}

TEST(AuditConfig, ParsingAndRebasing) {
  TempDir dir;
  write_file(dir / "audit.json",
             R"({"workspace":"ws","output_dir":"/abs/out","n":10,"seed":5,"formats":["csv"]})");
  auto c = load_audit_config(dir / "audit.json");
  EXPECT_EQ(c.workspace, dir / "ws");
  EXPECT_EQ(c.output_dir, "/abs/out");
  EXPECT_EQ(c.n, 10u);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_THROW(audit_config_from_json(nlohmann::json::parse(R"({"formats":["pdf"]})")),
               ValidationError);
  EXPECT_THROW(audit_config_from_json(nlohmann::json::parse(R"({"n":"x"})")), ValidationError);
}

TEST(Audit, CardinalityDeterminismAndRoundTrip) {
  TempDir dir;
  make_workspace(dir / "ws");
  AuditRunConfig config;
  config.workspace = dir / "ws";
  config.output_dir = dir / "out1";
  config.seed = 3;
  auto m1 = run_audit(config);

  std::map<std::string, int> kinds;
  for (const auto& f : m1.files) ++kinds[f.kind];
  EXPECT_EQ(kinds["stats"], 1);
  EXPECT_EQ(kinds["bias_table"], 4);
  EXPECT_EQ(kinds["polarization_grid"], 1);
  EXPECT_EQ(kinds["ci_matrix"], 2);
  EXPECT_EQ(kinds["transfer_matrix"], 2);
  EXPECT_EQ(kinds["ci_heatmap"], 2);

  auto grid = polarization_from_table(parse_csv(read_file(dir / "out1" / "polarization.csv")));
  EXPECT_EQ(grid.topics.size(), 2u);
  EXPECT_EQ(grid.models.size(), 2u);

  for (const auto& f : m1.files) {
    if (f.path.ends_with(".csv")) EXPECT_NO_THROW(parse_csv(read_file(dir / "out1" / f.path)));
  }
  auto manifest = nlohmann::json::parse(read_file(dir / "out1" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["files"].size(), m1.files.size());

  config.output_dir = dir / "out2";
  auto m2 = run_audit(config);
  ASSERT_EQ(m1.files.size(), m2.files.size());
  for (std::size_t i = 0; i < m1.files.size(); ++i) EXPECT_EQ(m1.files[i].sha256, m2.files[i].sha256);
  EXPECT_EQ(read_file(dir / "out1" / "manifest.json"), read_file(dir / "out2" / "manifest.json"));

  config.output_dir = dir / "out3";
  config.seed = 4;
  auto m3 = run_audit(config);
  EXPECT_NE(read_file(dir / "out1" / "manifest.json"), read_file(dir / "out3" / "manifest.json"));
}

TEST(Audit, MissingCoverageIsEnumerated) {
  TempDir dir;
  auto c = generate_synth(audit_spec("synthA", 1, 0.5));
  Corpus partial(c.topics());
  for (const auto& [id, a] : c.articles()) partial.add_article(a);
  for (const auto& [k, r] : c.summaries()) {
    if (!(k.alignment == Alignment::Republican && partial.topic_of(r) == "Immigration"))
      partial.add_summary(r);
  }
  Workspace(dir / "ws").save(partial);
  AuditRunConfig config;
  config.workspace = dir / "ws";
  config.output_dir = dir / "out";
  try {
    run_audit(config);
    FAIL();
  } catch (const MissingDataError& e) {
    EXPECT_NE(std::string(e.what()).find("(Immigration, synthA, republican)"), std::string::npos);
  }
  config.models = {"nobody"};
  EXPECT_THROW(run_audit(config), ValidationError);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  make_workspace(dir / "ws");
  const auto ws = (dir / "ws").string();
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("-w " + ws + " stats --format json"), 0);
  EXPECT_EQ(run_cli("-w " + ws + " lexicon --topic Abortion --model-id synthA --n 5"), 0);
  EXPECT_EQ(run_cli("-w " + ws + " lexicon --topic Abortion --model-id ghost"), 2);
  EXPECT_EQ(run_cli("-w " + ws + " stats --topic Weather"), 2);
  EXPECT_EQ(run_cli("-w " + (dir / "empty").string() + " stats"), 3);
  EXPECT_EQ(run_cli("-w " + ws + " frobnicate"), 2);
  EXPECT_EQ(run_cli("-w " + ws + " monoculture vocab --ideology democrat --n 5"), 0);

  write_file(dir / "bad.jsonl", "{oops\n");
  EXPECT_EQ(run_cli("-w " + ws + " ingest --kind articles --path " + (dir / "bad.jsonl").string()),
            2);
}
