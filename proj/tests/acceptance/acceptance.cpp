// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include "httplib.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "polaudit/classifier.hpp"
#include "polaudit/errors.hpp"
#include "polaudit/lexicon.hpp"
#include "polaudit/monoculture.hpp"
#include "polaudit/report.hpp"
#include "polaudit/separability.hpp"
#include "polaudit/summarygen.hpp"
#include "polaudit/synth.hpp"

using namespace polaudit;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kTable5Tol = 0.005;
constexpr double kTable5Seconds = 1.0;
constexpr double kCiTol = 0.01;
constexpr double kCiSeconds = 1.0;
constexpr double kChanceLo = 0.47;
constexpr double kChanceHi = 0.53;
constexpr double kSeparableMin = 0.95;
constexpr double kCalibrationSeconds = 120.0;
constexpr double kSignMargin = 2.0;  // percentage points
constexpr double kGradRelTol = 1e-5;
constexpr double kTransferSharedTol = 0.05;
constexpr double kTransferChanceTol = 0.05;
constexpr double kTransferDiagMin = 0.95;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void run(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
  try {
    auto [ok, detail] = f();
    report(id, name, ok, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("polaudit_accept_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- 1 ---------------------------------------------------------------------

std::pair<bool, std::string> table4_to_table5() {
  const auto t0 = Clock::now();
  const std::vector<std::string> topics = {"Abortion", "Gun Control", "Healthcare", "Immigration",
                                           "LGBTQ+"};
  const std::vector<std::string> models = {"LLaMA", "Mistral", "PaLM", "Vicuna"};
  const std::vector<std::vector<double>> grid = {{-4.30, -3.51, -2.39, -0.96},
                                                 {-5.21, -1.14, -9.49, 1.33},
                                                 {-6.14, -2.83, -4.14, 0.75},
                                                 {-5.66, -2.95, -0.89, -0.79},
                                                 {-2.98, -1.87, -2.83, -0.53}};
  std::vector<std::vector<std::optional<double>>> cells;
  for (const auto& row : grid) cells.emplace_back(row.begin(), row.end());
  auto rep = polarization_report(topics, models, cells);

  const std::vector<double> means = {-2.79, -3.63, -3.09, -2.57, -2.05};
  const std::vector<double> maxmag = {-4.30, -9.49, -6.14, -5.66, -2.98};
  const std::vector<double> model_means = {-4.86, -2.46, -3.95, -0.04};
  double worst = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    worst = std::max(worst, std::abs(rep.topic_means[i] - means[i]));
    worst = std::max(worst, std::abs(rep.topic_max_magnitude[i] - maxmag[i]));
  }
  for (std::size_t j = 0; j < 4; ++j)
    worst = std::max(worst, std::abs(rep.model_means[j] - model_means[j]));
  const double secs = seconds_since(t0);
  const bool ok = worst <= kTable5Tol && secs < kTable5Seconds && summary_consistent(rep);
  return {ok, fmt("max |err| %.6f", worst) + fmt(" (tol %.3f)", kTable5Tol) +
                  fmt(", %.4f s", secs)};
}

// ---- 2 ---------------------------------------------------------------------

SquareMatrix with_offdiag(const std::vector<double>& pairs) {
  // pairs in order (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
  SquareMatrix m;
  m.labels = {"LLaMA", "Mistral", "PaLM", "Vicuna"};
  m.cells.assign(4, std::vector<double>(4, 100.0));
  std::size_t k = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) m.cells[i][j] = m.cells[j][i] = pairs[k++];
  return m;
}

std::pair<bool, std::string> ci_reconciliation() {
  const auto t0 = Clock::now();
  auto dem = matrix_means(with_offdiag({62, 28, 38, 40, 37, 38}));
  auto rep = matrix_means(with_offdiag({51, 28, 35, 35, 35.9, 35}));
  const double secs = seconds_since(t0);
  const bool ok = std::abs(dem.off_diagonal - 40.5) <= kCiTol &&
                  std::abs(dem.overall - 55.375) <= kCiTol &&
                  std::abs(dem.overall - 55.37) <= kCiTol &&
                  std::abs(rep.off_diagonal - 36.65) <= kCiTol &&
                  std::abs(rep.overall - 52.4875) <= kCiTol &&
                  std::abs(rep.overall - 52.49) <= kCiTol && secs < kCiSeconds;
  return {ok, fmt("dem overall %.4f", dem.overall) + fmt(" off %.4f", dem.off_diagonal) +
                  fmt("; rep overall %.4f", rep.overall) + fmt(" off %.4f", rep.off_diagonal) +
                  fmt(", %.4f s", secs)};
}

// ---- 3 ---------------------------------------------------------------------

struct Brute {
  std::map<std::string, double> score;
  std::vector<std::string> top_dem, top_rep;
};

Brute brute_force(const std::vector<std::string>& dem, const std::vector<std::string>& rep,
                  std::size_t n, std::uint64_t threshold) {
  std::map<std::string, std::uint64_t> cd, cr;
  for (const auto& t : dem) ++cd[t];
  for (const auto& t : rep) ++cr[t];
  std::set<std::string> vocab;
  for (const auto& [t, c] : cd) vocab.insert(t);
  for (const auto& [t, c] : cr) vocab.insert(t);
  Brute b;
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& t : vocab) {
    if (cd[t] + cr[t] < threshold) continue;
    const double s = static_cast<double>(cr[t]) / static_cast<double>(rep.size()) -
                     static_cast<double>(cd[t]) / static_cast<double>(dem.size());
    b.score[t] = s;
    scored.emplace_back(s, t);
  }
  auto by_rep = scored;
  std::sort(by_rep.begin(), by_rep.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  auto by_dem = scored;
  std::sort(by_dem.begin(), by_dem.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first < y.first : x.second < y.second;
  });
  for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) {
    b.top_rep.push_back(by_rep[i].second);
    b.top_dem.push_back(by_dem[i].second);
  }
  return b;
}

bool matches(const BiasTable& t, const Brute& b) {
  if (t.entries.size() != b.score.size()) return false;
  for (const auto& e : t.entries) {
    auto it = b.score.find(e.token);
    if (it == b.score.end() || it->second != e.score) return false;
  }
  return t.top_dem == b.top_dem && t.top_rep == b.top_rep;
}

std::pair<bool, std::string> bias_oracle() {
  std::mt19937_64 rng(20240601);
  const Tokenizer tok({}, false);
  int matched = 0, antisym = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t vocab = 3 + rng() % 25;
    auto draw = [&](std::size_t len) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < len; ++i) out.push_back("tok" + std::to_string(rng() % vocab));
      return out;
    };
    auto dem = draw(1 + rng() % 100);
    auto rep = draw(1 + rng() % 100);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& t : v) s += t + (s.size() % 7 == 0 ? ". " : " ");
      return std::vector<std::string>{s};
    };
    const std::size_t n = 1 + rng() % 10;
    const std::uint64_t threshold = rng() % 4;
    auto dd = distribution_of_texts(join(dem), tok, "dem");
    auto dr = distribution_of_texts(join(rep), tok, "rep");
    auto table = bias_table(dd, dr, n, threshold);
    if (matches(table, brute_force(dem, rep, n, threshold))) ++matched;

    auto swapped = bias_table(dr, dd, n, threshold);
    bool ok = swapped.entries.size() == table.entries.size() && swapped.top_dem == table.top_rep &&
              swapped.top_rep == table.top_dem;
    for (std::size_t i = 0; ok && i < table.entries.size(); ++i)
      ok = swapped.entries[i].token == table.entries[i].token &&
           swapped.entries[i].score == -table.entries[i].score;
    if (ok) ++antisym;
  }
  return {matched == 50 && antisym == 50,
          std::to_string(matched) + "/50 exact, " + std::to_string(antisym) + "/50 antisymmetric"};
}

// ---- 4, 5 ------------------------------------------------------------------

SynthSpec calibration_spec(double rate, double alpha, std::size_t docs, std::uint64_t seed) {
  SynthSpec s;
  s.model_id = "synth";
  s.base_vocab = numbered_tokens("w", 300);
  s.dem_markers = numbered_tokens("dem", 10);
  s.rep_markers = numbered_tokens("rep", 10);
  s.injection_rate = rate;
  s.neutral_mix = alpha;
  s.doc_length = 20;
  s.docs_per_class = docs;
  s.seed = seed;
  return s;
}

struct Split {
  std::vector<SummaryRecord> neutral, dem, rep;
};

Split split(const Corpus& c) {
  Split s;
  for (const auto& [k, r] : c.summaries()) {
    if (k.alignment == Alignment::Neutral) s.neutral.push_back(r);
    else if (k.alignment == Alignment::Democrat) s.dem.push_back(r);
    else s.rep.push_back(r);
  }
  return s;
}

std::pair<bool, std::string> chance_calibration() {
  const auto t0 = Clock::now();
  HashedNgramFeaturizer f;
  double lo = 1, hi = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = split(generate_synth(calibration_spec(0.0, 0.5, 1000, seed)));
    const double acc = diff(s.neutral, s.dem, f, seed).mean_accuracy;
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  auto s = split(generate_synth(calibration_spec(1.0, 0.5, 1000, 99)));
  const double sep = diff(s.neutral, s.dem, f, 99).mean_accuracy;
  const double secs = seconds_since(t0);
  const bool ok = lo >= kChanceLo && hi <= kChanceHi && sep >= kSeparableMin &&
                  secs < kCalibrationSeconds;
  return {ok, fmt("lambda=0 range [%.4f,", lo) + fmt(" %.4f]", hi) +
                  fmt(", lambda=1 %.4f", sep) + fmt(", %.1f s", secs)};
}

// Injection rate and corpus size used for the sign oracle; at high rates both
// contrasts saturate near 1.0 and P collapses towards zero.
constexpr double kSignRate = 0.1;
constexpr std::size_t kSignDocs = 1000;

std::pair<bool, std::string> sign_oracle() {
  HashedNgramFeaturizer f;
  std::string detail;
  bool ok = true;
  for (double alpha : {0.2, 0.5, 0.8}) {
    int hits = 0;
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto s = split(generate_synth(calibration_spec(kSignRate, alpha, kSignDocs, 100 + seed)));
      const double p = polarization(diff(s.neutral, s.dem, f, seed), diff(s.neutral, s.rep, f, seed));
      sum += p;
      if (alpha < 0.5 ? p > kSignMargin : alpha > 0.5 ? p < -kSignMargin : std::abs(p) < kSignMargin)
        ++hits;
    }
    const int need = alpha == 0.5 ? 6 : 9;
    ok = ok && hits >= need;
    detail += fmt("alpha=%.1f ", alpha) + std::to_string(hits) + "/10" + fmt(" (mean P %.2f)", sum / 10) +
              (alpha < 0.8 ? "; " : "");
  }
  return {ok, detail};
}

// ---- 6 ---------------------------------------------------------------------

std::pair<bool, std::string> gradient_check() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::uint32_t dims = 2 + rng() % 63;
    const std::size_t n = 2 + rng() % 31;
    std::vector<FeatureVector> x(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i].dims = dims;
      for (std::uint32_t d = 0; d < dims; ++d) {
        if (rng() % 3 == 0) {
          x[i].indices.push_back(d);
          x[i].values.push_back(2 * u(rng));
        }
      }
      y[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    auto problem = make_problem(x, y);
    const double l2 = 1e-4 * (1 + inst % 3);
    std::vector<double> w(problem.dims());
    for (auto& v : w) v = u(rng);
    const double b = u(rng);
    auto obj = kernels::serial::logistic_objective(problem, w, b, l2);

    const double h = 1e-6;
    auto loss_at = [&](std::size_t k, double delta) {
      auto wp = w;
      double bp = b;
      if (k < wp.size()) wp[k] += delta;
      else bp += delta;
      return kernels::serial::logistic_objective(problem, wp, bp, l2).loss;
    };
    double num = 0, den = 0;
    for (std::size_t k = 0; k <= w.size(); ++k) {
      const double fd = (loss_at(k, h) - loss_at(k, -h)) / (2 * h);
      const double g = k < w.size() ? obj.grad_w[k] : obj.grad_b;
      num += (g - fd) * (g - fd);
      den += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  return {worst <= kGradRelTol, fmt("max relative error %.3e", worst) + fmt(" (tol %.0e)", kGradRelTol)};
}

// ---- 7 ---------------------------------------------------------------------

ModelSummaries model_from(const SynthSpec& spec, Contrast contrast) {
  auto c = generate_synth(spec);
  ModelSummaries m;
  m.model_id = spec.model_id;
  for (const auto& [k, r] : c.summaries()) {
    if (k.alignment == Alignment::Neutral) m.neutral.push_back(r);
    else if (k.alignment == aligned_side(contrast)) m.aligned.push_back(r);
  }
  return m;
}

SynthSpec marker_spec(const std::string& model, const std::string& dem, const std::string& rep,
                      std::uint64_t seed) {
  auto s = calibration_spec(1.0, 0.5, 300, seed);
  s.model_id = model;
  s.dem_markers = numbered_tokens(dem, 10);
  s.rep_markers = numbered_tokens(rep, 10);
  return s;
}

std::pair<bool, std::string> transfer_oracle() {
  HashedNgramFeaturizer f;
  const auto contrast = Contrast::NeutralVsDemocrat;
  std::vector<ModelSummaries> shared = {model_from(marker_spec("A", "dem", "rep", 1), contrast),
                                        model_from(marker_spec("B", "dem", "rep", 2), contrast)};
  auto ts = transfer_matrix(shared, contrast, f, 5).matrix.cells;
  std::vector<ModelSummaries> disjoint = {
      model_from(marker_spec("A", "ademo", "arepu", 1), contrast),
      model_from(marker_spec("B", "bdemo", "brepu", 2), contrast)};
  auto td = transfer_matrix(disjoint, contrast, f, 5).matrix.cells;
  const double shared_gap = std::max(std::abs(ts[0][1] - ts[0][0]), std::abs(ts[1][0] - ts[1][1]));
  const double chance_gap = std::max(std::abs(td[0][1] - 0.5), std::abs(td[1][0] - 0.5));
  const double diag = std::min(td[0][0], td[1][1]);
  const bool ok = shared_gap <= kTransferSharedTol && chance_gap <= kTransferChanceTol &&
                  diag >= kTransferDiagMin;
  return {ok, fmt("shared |off-diag| %.4f", shared_gap) + fmt(", disjoint |off-0.5| %.4f", chance_gap) +
                  fmt(", disjoint diag min %.4f", diag)};
}

// ---- 8 ---------------------------------------------------------------------

// Minimal well-formedness check: balanced tags, quoted attributes, known entities.
bool well_formed_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool root_seen = false;
  while (i < s.size()) {
    if (s[i] == '<') {
      if (s.compare(i, 5, "<?xml") == 0 || s.compare(i, 4, "<!--") == 0) {
        const auto end = s.find(s[i + 1] == '?' ? "?>" : "-->", i);
        if (end == std::string::npos) return false;
        i = end + 2;
        continue;
      }
      const auto end = s.find('>', i);
      if (end == std::string::npos) return false;
      std::string tag = s.substr(i + 1, end - i - 1);
      if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
      if (tag.empty()) return false;
      if (tag[0] == '/') {
        if (stack.empty() || stack.back() != tag.substr(1)) return false;
        stack.pop_back();
      } else {
        const bool self_closing = tag.back() == '/';
        const auto name = tag.substr(0, tag.find_first_of(" /\t\n"));
        if (stack.empty() && root_seen) return false;
        root_seen = true;
        if (!self_closing) stack.push_back(name);
      }
      i = end + 1;
    } else if (s[i] == '&') {
      const auto semi = s.find(';', i);
      if (semi == std::string::npos) return false;
      static const std::set<std::string> entities = {"amp", "lt", "gt", "quot", "apos"};
      if (!entities.count(s.substr(i + 1, semi - i - 1))) return false;
      i = semi + 1;
    } else {
      ++i;
    }
  }
  return root_seen && stack.empty();
}

std::map<std::pair<int, int>, std::string> diag_fills(const std::string& svg) {
  std::map<std::pair<int, int>, std::string> out;
  std::size_t pos = 0;
  const std::string marker = "<rect class=\"cell\"";
  while ((pos = svg.find(marker, pos)) != std::string::npos) {
    const auto end = svg.find('>', pos);
    const auto tag = svg.substr(pos, end - pos);
    auto attr = [&](const std::string& name) {
      const auto a = tag.find(name + "=\"") + name.size() + 2;
      return tag.substr(a, tag.find('"', a) - a);
    };
    out[{std::stoi(attr("data-row")), std::stoi(attr("data-col"))}] = attr("fill");
    pos = end;
  }
  return out;
}

std::pair<bool, std::string> audit_determinism() {
  TempDir dir;
  auto spec = [](const std::string& model, std::uint64_t seed, double alpha) {
    auto s = calibration_spec(0.3, alpha, 40, seed);
    s.model_id = model;
    s.topics = {"Abortion", "Immigration"};
    return s;
  };
  auto corpus = generate_synth(spec("synthA", 1, 0.7));
  add_synth(corpus, spec("synthB", 2, 0.3));
  add_synth(corpus, spec("synthC", 3, 0.5));
  Workspace(dir / "ws").save(corpus);

  AuditRunConfig config;
  config.workspace = dir / "ws";
  config.n = 10;
  config.seed = 11;
  config.output_dir = dir / "run1";
  run_audit(config);
  config.output_dir = dir / "run2";
  run_audit(config);

  std::size_t files = 0, differing = 0, csv_ok = 0, csv = 0, svg_ok = 0, svg = 0;
  for (const auto& entry : fs::directory_iterator(dir / "run1")) {
    const auto name = entry.path().filename().string();
    const auto a = slurp(entry.path());
    ++files;
    if (a != slurp(dir / "run2" / name)) ++differing;
    if (entry.path().extension() == ".csv") {
      ++csv;
      auto table = parse_csv(a);
      bool ok = to_csv(table) == a;
      for (const auto& row : table.rows)
        for (const auto& cell : row) {
          try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used == cell.size()) ok = ok && format_number(parse_number(cell)) == cell &&
                                          parse_number(cell) == v;
          } catch (const std::invalid_argument&) {
          }
        }
      if (ok) ++csv_ok;
    }
    if (entry.path().extension() == ".svg" && name.rfind("ci_", 0) == 0) {
      ++svg;
      const auto top = std::string(palette_colors(Palette::Diverging).back());
      auto fills = diag_fills(a);
      bool ok = well_formed_xml(a) && fills.size() == 9;
      for (int i = 0; i < 3; ++i) ok = ok && fills[{i, i}] == top;
      if (ok) ++svg_ok;
    } else if (entry.path().extension() == ".svg") {
      if (!well_formed_xml(a)) ++differing;
    }
  }
  const bool ok = files > 0 && differing == 0 && csv > 0 && csv_ok == csv && svg == 2 && svg_ok == svg;
  return {ok, std::to_string(files) + " files, " + std::to_string(differing) + " differing; csv " +
                  std::to_string(csv_ok) + "/" + std::to_string(csv) + " round-trip; ci svg " +
                  std::to_string(svg_ok) + "/" + std::to_string(svg) + " diagonal-max"};
}

// ---- 9 ---------------------------------------------------------------------

class Stub {
 public:
  explicit Stub(bool fail_once) : fail_once_(fail_once) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto prompt =
          nlohmann::json::parse(req.body).at("messages").at(0).at("content").get<std::string>();
      {
        std::lock_guard lock(mutex_);
        if (fail_once_ && seen_.insert(prompt).second) {
          res.status = 500;
          return;
        }
      }
      nlohmann::json out;
      out["choices"] = {{{"message", {{"role", "assistant"}, {"content", "ok " + prompt.substr(0, 20)}}}}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Stub() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  bool fail_once_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
  std::set<std::string> seen_;
};

std::pair<bool, std::string> generation_client() {
  auto articles = [] {
    Corpus c;
    for (int i = 0; i < 4; ++i)
      c.add_article({"art" + std::to_string(i), "Healthcare", "Body of article " + std::to_string(i) + ".",
                     std::nullopt, std::nullopt});
    return c;
  };
  auto config = [](const Stub& s, int attempts) {
    GenerationConfig cfg;
    cfg.model_id = "stub";
    cfg.endpoint = s.url();
    cfg.retry.max_attempts = attempts;
    cfg.retry.initial_backoff = std::chrono::milliseconds(1);
    cfg.retry.request_timeout = std::chrono::milliseconds(5000);
    cfg.concurrency = 2;
    return cfg;
  };

  Stub ok_stub(false);
  auto corpus = articles();
  HttpChatClient client(ok_stub.url(), std::nullopt, std::chrono::milliseconds(5000));
  auto first = generate(corpus, config(ok_stub, 3), client);
  std::map<std::string, int> per_article;
  for (const auto& [k, r] : corpus.summaries()) ++per_article[k.article_id];
  bool three_each = per_article.size() == 4;
  for (const auto& [a, n] : per_article) three_each = three_each && n == 3;
  auto second = generate(corpus, config(ok_stub, 3), client);

  Stub flaky(true);
  auto corpus2 = articles();
  HttpChatClient flaky_client(flaky.url(), std::nullopt, std::chrono::milliseconds(5000));
  auto retried = generate(corpus2, config(flaky, 2), flaky_client);

  const bool ok = first.done == 12 && three_each && second.requests == 0 && second.skipped == 12 &&
                  retried.failed == 0 && retried.done == 12 && retried.requests == 24;
  return {ok, "first done " + std::to_string(first.done) + ", rerun requests " +
                  std::to_string(second.requests) + ", fail-once done " +
                  std::to_string(retried.done) + " failed " + std::to_string(retried.failed)};
}

}  // namespace

int main() {
  run(1, "polarization table reproduction", table4_to_table5);
  run(2, "consistency index mean reconciliation", ci_reconciliation);
  run(3, "bias score counting oracle", bias_oracle);
  run(4, "chance calibration", chance_calibration);
  run(5, "polarization sign oracle", sign_oracle);
  run(6, "gradient verification", gradient_check);
  run(7, "transfer oracle", transfer_oracle);
  run(8, "audit determinism and round-trip", audit_determinism);
  run(9, "generation client", generation_client);
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
