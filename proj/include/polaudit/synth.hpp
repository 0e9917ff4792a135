#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "polaudit/corpus.hpp"

namespace polaudit {

// Synthetic three-way corpus with a known, controllable ideological signal.
//
// Every summary is `doc_length` tokens. Each token of a Democrat summary is a
// uniformly drawn dem marker with probability `injection_rate`, otherwise a
// uniformly drawn base token; Republican summaries likewise with rep markers.
// Neutral summaries draw a dem marker with probability
// neutral_mix * injection_rate and a rep marker with probability
// (1 - neutral_mix) * injection_rate.
struct SynthSpec {
  std::vector<std::string> base_vocab;
  std::vector<std::string> dem_markers;
  std::vector<std::string> rep_markers;
  double injection_rate = 0.0;
  double neutral_mix = 0.5;
  std::size_t doc_length = 50;
  std::size_t docs_per_class = 100;  // articles per topic
  std::uint64_t seed = 0;
  std::string model_id = "synthA";
  std::vector<std::string> topics = {"Abortion"};
};

// {prefix}000, {prefix}001, ...
std::vector<std::string> numbered_tokens(const std::string& prefix, std::size_t count);

// Throws ValidationError when the spec is inconsistent.
void validate(const SynthSpec& spec);

// Token lists may be given as arrays or as {"prefix": "w", "count": 200}.
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

// A spec file holds one spec object or {"models": [spec, ...]}.
std::vector<SynthSpec> load_synth_specs(const std::filesystem::path& path);

// Articles plus neutral/democrat/republican summaries for one pseudo-model.
Corpus generate_synth(const SynthSpec& spec);

// Adds one pseudo-model to an existing corpus. Articles already present are
// reused, so several specs over the same topics share articles.
void add_synth(Corpus& corpus, const SynthSpec& spec);

// Expected B(token) = E[freq_rep] - E[freq_dem] under the spec. Throws
// ValidationError for a token outside the spec's vocabularies.
double expected_bias(const SynthSpec& spec, const std::string& token);

// Article ids look like "synth-<topic>-00042".
std::string synth_article_id(const std::string& topic, std::size_t index);

}  // namespace polaudit
