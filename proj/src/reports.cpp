#include "chandas/reports.hpp"

#include "chandas/prosody.hpp"
#include "json.hpp"

namespace chandas::reports {
namespace {

using json = nlohmann::json;

json syllable_list(const Syllabification& s) {
  json out = json::array();
  for (const auto& syl : s.syllables) out.push_back(syl.iast());
  return out;
}

std::string pending_iast(const Syllabification& s) {
  std::string out;
  for (Phoneme p : s.pending) out += iast_of(p);
  return out;
}

}  // namespace

std::string syllabify_json(std::string_view text, Script script) {
  const auto s = syllabify(parse(text, script));
  return json{{"script", to_string(script)},
              {"syllables", syllable_list(s)},
              {"pending", pending_iast(s)},
              {"count", s.size()}}
      .dump();
}

std::string scan_json(std::string_view text, Script script, const MeterSpec* meter) {
  const auto s = syllabify(parse(text, script));
  const auto w = weigh(s, WeighMode::Final);
  const auto [ganas, rest] = gana_split(w.weights);
  json names = json::array();
  for (const auto& g : ganas) names.push_back(to_string(g.name));
  json out = {{"script", to_string(script)},
              {"syllables", syllable_list(s)},
              {"weights", w.str()},
              {"count", s.size()},
              {"ganas", names},
              {"remainder", rest}};
  if (meter) {
    const auto v = classify(*meter, s);
    json verdict = {{"meter", meter->name}, {"kind", to_string(v.kind)}};
    if (v.first_violation) verdict["first_violation"] = *v.first_violation;
    out["verdict"] = verdict;
  }
  return out.dump();
}

std::string generation_json(const decode::Generation& g, bool with_timing, bool pretty) {
  json stats = {{"tokens", g.summary.tokens},
                {"cache_hit_rate", g.summary.cache_hit_rate},
                {"cache_hits", g.summary.cache_hits},
                {"cache_misses", g.summary.cache_misses},
                {"escalations", g.summary.escalations},
                {"examined", g.summary.examined},
                {"dead_end", g.dead_end},
                {"sampler_degraded", g.summary.sampler_degraded}};
  if (with_timing) {
    stats["latency_mean_s"] = g.summary.latency_mean_s;
    stats["throughput_tok_s"] = g.summary.throughput_tok_s;
    stats["scan_fraction"] = g.summary.scan_fraction;
  }
  std::string iast;
  try {
    iast = transliterate(g.text, Script::Devanagari, Script::Iast);
  } catch (const std::exception&) {
    iast.clear();
  }
  json out = {{"text_devanagari", g.text},
              {"text_iast", iast},
              {"weights", g.verdict.weights.str()},
              {"verdict", to_string(g.verdict.kind)},
              {"syllables", g.verdict.syllables},
              {"stats", stats}};
  if (g.dead_end) out["dead_end_reason"] = g.dead_end_reason;
  return pretty ? out.dump(2) : out.dump();
}

std::string bench_json(const decode::BenchReport& r, const decode::DecodeConfig& config,
                       bool with_timing) {
  json out = {{"generations", r.generations},
              {"completed", r.completed},
              {"full", r.full},
              {"dead_ends", r.dead_ends},
              {"tokens", r.tokens},
              {"cache_hit_rate", r.cache_hit_rate},
              {"escalation_rate", r.escalation_rate},
              {"k_init", config.k_init},
              {"cache_size", config.cache_capacity},
              {"sampler", to_string(config.sampler.kind)},
              {"seed", config.seed}};
  if (config.k_max) out["k_max"] = *config.k_max;
  if (with_timing) {
    out["wall_s"] = r.wall_s;
    out["latency_mean_s"] = r.latency_mean_s;
    out["throughput_tok_s"] = r.throughput_tok_s;
    out["scan_fraction"] = r.scan_fraction;
  }
  return out.dump(2);
}

std::string model_json(const lm::NgramModel& model) {
  return json{{"order", model.order()},
              {"smoothing", model.smoothing()},
              {"vocab_size", model.vocab().size()},
              {"vocab_sha256", model.vocab().digest()}}
      .dump();
}

}  // namespace chandas::reports
