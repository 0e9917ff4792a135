#include "polaudit/synth.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "polaudit/errors.hpp"
#include "polaudit/hashing.hpp"

namespace polaudit {

namespace {

constexpr std::size_t kArticleSentences = 5;
constexpr std::size_t kArticleSentenceLength = 10;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

const std::string& pick(const std::vector<std::string>& v, std::mt19937_64& rng) {
  return v[static_cast<std::size_t>(rng() % v.size())];
}

std::vector<std::string> token_list(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) return {};
  const auto& v = j.at(name);
  if (v.is_array()) return v.get<std::vector<std::string>>();
  if (v.is_object())
    return numbered_tokens(v.at("prefix").get<std::string>(), v.at("count").get<std::size_t>());
  throw ValidationError(std::string("field \"") + name + "\" must be a list or {prefix, count}");
}

std::string summary_text(const SynthSpec& spec, Alignment alignment, std::uint64_t doc_seed) {
  std::mt19937_64 rng(doc_seed);
  const double lambda = spec.injection_rate;
  double dem_rate = 0.0;
  double rep_rate = 0.0;
  switch (alignment) {
    case Alignment::Democrat:
      dem_rate = lambda;
      break;
    case Alignment::Republican:
      rep_rate = lambda;
      break;
    case Alignment::Neutral:
      dem_rate = spec.neutral_mix * lambda;
      rep_rate = (1.0 - spec.neutral_mix) * lambda;
      break;
  }
  std::string text;
  for (std::size_t i = 0; i < spec.doc_length; ++i) {
    const double u = uniform01(rng);
    const std::string* tok;
    if (u < dem_rate) {
      tok = &pick(spec.dem_markers, rng);
    } else if (u < dem_rate + rep_rate) {
      tok = &pick(spec.rep_markers, rng);
    } else {
      tok = &pick(spec.base_vocab, rng);
    }
    if (i) text.push_back(' ');
    text += *tok;
  }
  return text;
}

std::string article_text(const SynthSpec& spec, const std::string& article_id) {
  std::mt19937_64 rng(fnv1a64(article_id));
  std::string text;
  for (std::size_t s = 0; s < kArticleSentences; ++s) {
    for (std::size_t i = 0; i < kArticleSentenceLength; ++i) {
      if (!text.empty()) text.push_back(' ');
      text += pick(spec.base_vocab, rng);
    }
    text.push_back('.');
  }
  return text;
}

}  // namespace

std::vector<std::string> numbered_tokens(const std::string& prefix, std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  char buf[32];
  for (std::size_t i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof buf, "%03zu", i);
    out.push_back(prefix + buf);
  }
  return out;
}

std::string synth_article_id(const std::string& topic, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", index);
  return "synth-" + topic + "-" + buf;
}

void validate(const SynthSpec& spec) {
  if (spec.injection_rate < 0.0 || spec.injection_rate > 1.0)
    throw ValidationError("injection_rate must lie in [0, 1]");
  if (spec.neutral_mix < 0.0 || spec.neutral_mix > 1.0)
    throw ValidationError("neutral_mix must lie in [0, 1]");
  if (spec.base_vocab.empty()) throw ValidationError("base_vocab is empty");
  if (spec.injection_rate > 0.0 && (spec.dem_markers.empty() || spec.rep_markers.empty()))
    throw ValidationError("marker lists must be non-empty when injection_rate > 0");
  if (spec.doc_length == 0) throw ValidationError("doc_length must be positive");
  if (spec.docs_per_class == 0) throw ValidationError("docs_per_class must be positive");
  if (spec.model_id.empty()) throw ValidationError("model_id is empty");
  if (spec.topics.empty()) throw ValidationError("topic list is empty");

  std::set<std::string> base(spec.base_vocab.begin(), spec.base_vocab.end());
  std::set<std::string> dem(spec.dem_markers.begin(), spec.dem_markers.end());
  for (const auto& t : spec.dem_markers) {
    if (base.count(t)) throw ValidationError("dem marker \"" + t + "\" is also a base token");
  }
  for (const auto& t : spec.rep_markers) {
    if (base.count(t)) throw ValidationError("rep marker \"" + t + "\" is also a base token");
    if (dem.count(t)) throw ValidationError("marker \"" + t + "\" is in both marker lists");
  }
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec spec;
  try {
    spec.base_vocab = token_list(j, "base_vocab");
    spec.dem_markers = token_list(j, "dem_markers");
    spec.rep_markers = token_list(j, "rep_markers");
    spec.injection_rate = j.value("injection_rate", spec.injection_rate);
    spec.neutral_mix = j.value("neutral_mix", spec.neutral_mix);
    spec.doc_length = j.value("doc_length", spec.doc_length);
    spec.docs_per_class = j.value("docs_per_class", spec.docs_per_class);
    spec.seed = j.value("seed", spec.seed);
    spec.model_id = j.value("model_id", spec.model_id);
    if (j.contains("topics")) spec.topics = j.at("topics").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

nlohmann::json synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["model_id"] = spec.model_id;
  j["topics"] = spec.topics;
  j["base_vocab"] = spec.base_vocab;
  j["dem_markers"] = spec.dem_markers;
  j["rep_markers"] = spec.rep_markers;
  j["injection_rate"] = spec.injection_rate;
  j["neutral_mix"] = spec.neutral_mix;
  j["doc_length"] = spec.doc_length;
  j["docs_per_class"] = spec.docs_per_class;
  j["seed"] = spec.seed;
  return nlohmann::json::parse(j.dump());
}

std::vector<SynthSpec> load_synth_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open synth spec " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("synth spec " + path.string() + ": " + e.what());
  }
  std::vector<SynthSpec> specs;
  if (doc.is_object() && doc.contains("models")) {
    for (const auto& m : doc.at("models")) specs.push_back(synth_spec_from_json(m));
  } else {
    specs.push_back(synth_spec_from_json(doc));
  }
  if (specs.empty()) throw ValidationError("synth spec lists no models");
  return specs;
}

void add_synth(Corpus& corpus, const SynthSpec& spec) {
  validate(spec);
  for (const auto& topic : spec.topics) {
    if (!corpus.topics().contains(topic))
      throw ValidationError("synth topic \"" + topic + "\" is not declared");
  }

  struct Doc {
    std::string article_id;
    std::size_t topic_index;
    std::size_t doc_index;
  };
  std::vector<Doc> docs;
  for (std::size_t t = 0; t < spec.topics.size(); ++t) {
    for (std::size_t i = 0; i < spec.docs_per_class; ++i) {
      docs.push_back({synth_article_id(spec.topics[t], i), t, i});
    }
  }

  // Per-document seeds make generation order-independent.
  const auto n = static_cast<std::ptrdiff_t>(docs.size());
  std::vector<std::array<std::string, 3>> texts(docs.size());
  const auto model_seed = mix_seed(spec.seed, fnv1a64(spec.model_id));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < n; ++d) {
    const auto& doc = docs[static_cast<std::size_t>(d)];
    const auto topic_seed = mix_seed(model_seed, fnv1a64(spec.topics[doc.topic_index]));
    for (std::size_t a = 0; a < kAlignments.size(); ++a) {
      const auto doc_seed = mix_seed(topic_seed, doc.doc_index * kAlignments.size() + a);
      texts[static_cast<std::size_t>(d)][a] = summary_text(spec, kAlignments[a], doc_seed);
    }
  }

  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    if (!corpus.find_article(doc.article_id)) {
      corpus.add_article(
          {doc.article_id, spec.topics[doc.topic_index], article_text(spec, doc.article_id),
           std::nullopt, std::nullopt});
    }
    for (std::size_t a = 0; a < kAlignments.size(); ++a) {
      corpus.add_summary(
          make_summary(doc.article_id, spec.model_id, kAlignments[a], std::move(texts[d][a])));
    }
  }
}

Corpus generate_synth(const SynthSpec& spec) {
  validate(spec);
  TopicRegistry defaults;
  auto topics = defaults.topics();
  for (const auto& t : spec.topics) {
    if (!defaults.contains(t)) topics.push_back(t);
  }
  Corpus corpus{TopicRegistry(std::move(topics))};
  add_synth(corpus, spec);
  return corpus;
}

double expected_bias(const SynthSpec& spec, const std::string& token) {
  const auto contains = [&](const std::vector<std::string>& v) {
    return std::find(v.begin(), v.end(), token) != v.end();
  };
  if (contains(spec.dem_markers))
    return -spec.injection_rate / static_cast<double>(spec.dem_markers.size());
  if (contains(spec.rep_markers))
    return spec.injection_rate / static_cast<double>(spec.rep_markers.size());
  if (contains(spec.base_vocab)) return 0.0;
  throw ValidationError("token \"" + token + "\" is not in the synth vocabulary");
}

}  // namespace polaudit
