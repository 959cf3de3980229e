#include "chandas/decode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "chandas/error.hpp"
#include "chandas/script.hpp"
#include "chandas/unicode.hpp"

namespace chandas::decode {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

bool ends_with_separator(const std::string& text) {
  if (text.empty()) return true;
  std::size_t start = text.size() - 1;
  while (start > 0 && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) --start;
  const auto cps = unicode::decode(std::string_view(text).substr(start));
  return !cps.empty() && devanagari_role(cps.back()) == DevanagariRole::Separator;
}

void renormalize(std::vector<Candidate>& cands) {
  double total = 0;
  for (const auto& c : cands) total += c.prob;
  for (auto& c : cands) c.prob = total > 0 ? c.prob / total : 1.0 / static_cast<double>(cands.size());
}

std::size_t draw(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // rounding left u at the top of the range
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return i;
  }
  return 0;
}

}  // namespace

// ---- scansion cache -------------------------------------------------------

Scan scan_text(const std::string& devanagari) {
  Scan out;
  try {
    const auto syl = syllabify(parse(devanagari, Script::Devanagari, Normalize::AssumeNfc));
    out.syllables = syl.size();
    out.streaming = weigh(syl, WeighMode::Streaming);
    out.final = weigh(syl, WeighMode::Final);
    out.parsed = true;
  } catch (const Error&) {
    out.parsed = false;
  }
  return out;
}

ScanCache::ScanCache(std::size_t capacity) : capacity_(capacity) {}

Scan ScanCache::get(const std::string& text, bool* hit) {
  {
    std::lock_guard lock(mu_);
    if (auto it = index_.find(text); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      ++hits_;
      if (hit) *hit = true;
      return it->second->second;
    }
    ++misses_;
  }
  if (hit) *hit = false;
  Scan scan = scan_text(text);
  if (capacity_ == 0) return scan;
  std::lock_guard lock(mu_);
  if (index_.count(text)) return scan;
  order_.emplace_front(text, scan);
  index_.emplace(order_.front().first, order_.begin());
  if (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return scan;
}

std::size_t ScanCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

std::size_t ScanCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t ScanCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

// ---- metre state -------------------------------------------------------------

std::string_view to_string(MaskReason r) {
  switch (r) {
    case MaskReason::Admitted: return "admitted";
    case MaskReason::Special: return "special";
    case MaskReason::RepeatedModifier: return "repeated-modifier";
    case MaskReason::RepeatedSeparator: return "repeated-separator";
    case MaskReason::Unparseable: return "unparseable";
    case MaskReason::TooLong: return "too-long";
    case MaskReason::PrefixViolation: return "prefix-violation";
    case MaskReason::FinalViolation: return "final-violation";
    case MaskReason::Complete: return "complete";
  }
  return "?";
}

MeterState::MeterState(const MeterSpec& spec, std::shared_ptr<ScanCache> cache, bool enforce_meter)
    : filters_(compile(spec)), cache_(std::move(cache)), enforce_(enforce_meter) {
  reset();
}

void MeterState::reset() {
  text_.clear();
  last_token_.clear();
  scan_ = scan_text(text_);
}

MaskReason MeterState::check(std::string_view token, bool* cache_hit) const {
  if (cache_hit) *cache_hit = false;
  if (complete()) return MaskReason::Complete;
  const auto kind = lm::classify_token(token);
  if (kind == lm::TokenKind::Special) return MaskReason::Special;
  if (token.empty()) return MaskReason::Unparseable;
  if (kind == lm::TokenKind::ModifierOnly && token == last_token_) return MaskReason::RepeatedModifier;
  if (kind == lm::TokenKind::Separator && ends_with_separator(text_)) {
    return MaskReason::RepeatedSeparator;
  }
  const std::string tentative = text_ + std::string(token);
  const Scan s = cache_ ? cache_->get(tentative, cache_hit) : scan_text(tentative);
  if (!s.parsed) return MaskReason::Unparseable;
  if (s.syllables > max_syllables()) return MaskReason::TooLong;
  if (!enforce_) return MaskReason::Admitted;
  if (!prefix_ok(*filters_, s.streaming)) return MaskReason::PrefixViolation;
  if (s.syllables == max_syllables() && !filters_->filter(s.syllables).matches(s.final.weights)) {
    return MaskReason::FinalViolation;
  }
  return MaskReason::Admitted;
}

void MeterState::accept(std::string_view token) {
  if (const auto r = check(token); r != MaskReason::Admitted) {
    throw Error(ErrorCode::InvalidArgument,
                "token '" + std::string(token) + "' is not admissible: " + std::string(to_string(r)));
  }
  text_ += token;
  last_token_ = token;
  scan_ = cache_ ? cache_->get(text_) : scan_text(text_);
}

// ---- sampling ------------------------------------------------------------------

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::Greedy: return "greedy";
    case SamplerKind::Multinomial: return "multinomial";
    case SamplerKind::Nucleus: return "nucleus";
    case SamplerKind::TopK: return "topk";
    case SamplerKind::Contrastive: return "contrastive";
  }
  return "?";
}

std::optional<SamplerKind> sampler_from_string(std::string_view name) {
  for (auto k : {SamplerKind::Greedy, SamplerKind::Multinomial, SamplerKind::Nucleus,
                 SamplerKind::TopK, SamplerKind::Contrastive}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void SamplerSpec::validate() const {
  if (!(temperature > 0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  if (!(top_p > 0 && top_p <= 1)) throw Error(ErrorCode::InvalidArgument, "top-p must be in (0, 1]");
  if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "top-k must be >= 1");
  if (contrastive_k < 1) throw Error(ErrorCode::InvalidArgument, "contrastive k must be >= 1");
  if (!(alpha >= 0 && alpha <= 1)) throw Error(ErrorCode::InvalidArgument, "alpha must be in [0, 1]");
}

std::size_t sample(const SamplerSpec& spec, std::span<const Candidate> survivors, Rng& rng,
                   const SampleContext& ctx, bool* degraded) {
  if (survivors.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to sample from");
  if (degraded) *degraded = false;
  std::vector<double> w;
  switch (spec.kind) {
    case SamplerKind::Greedy:
      return 0;
    case SamplerKind::Multinomial:
      for (const auto& c : survivors) w.push_back(std::pow(c.prob, 1.0 / spec.temperature));
      return draw(w, rng);
    case SamplerKind::Nucleus: {
      double mass = 0;
      for (const auto& c : survivors) {
        w.push_back(c.prob);
        mass += c.prob;
        if (mass >= spec.top_p) break;
      }
      return draw(w, rng);
    }
    case SamplerKind::TopK:
      for (std::size_t i = 0; i < std::min(spec.top_k, survivors.size()); ++i) {
        w.push_back(survivors[i].prob);
      }
      return draw(w, rng);
    case SamplerKind::Contrastive: {
      if (!ctx.reps || ctx.reps->empty()) {
        if (degraded) *degraded = true;
        return 0;
      }
      const auto& reps = *ctx.reps;
      std::size_t best = 0;
      double best_score = -INFINITY;
      for (std::size_t i = 0; i < std::min(spec.contrastive_k, survivors.size()); ++i) {
        const auto& v = reps.at(survivors[i].id);
        double penalty = 0;
        for (TokenId h : ctx.history) {
          const auto& u = reps.at(h);
          double dot = 0;
          for (std::size_t d = 0; d < lm::kRepDim; ++d) dot += double(v[d]) * double(u[d]);
          penalty = std::max(penalty, dot);
        }
        const double score = (1 - spec.alpha) * survivors[i].prob - spec.alpha * penalty;
        if (score > best_score) {
          best_score = score;
          best = i;
        }
      }
      return best;
    }
  }
  return 0;
}

// ---- decoding ---------------------------------------------------------------------

void DecodeConfig::validate(std::size_t vocab_size) const {
  const std::size_t kmax = resolved_k_max(vocab_size);
  if (k_init < 1 || k_init > kmax || kmax > vocab_size) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= k_init <= k_max <= |V| (k_init " +
                                                std::to_string(k_init) + ", k_max " +
                                                std::to_string(kmax) + ", |V| " +
                                                std::to_string(vocab_size) + ")");
  }
  if (!(k_growth > 1)) throw Error(ErrorCode::InvalidArgument, "k growth must be > 1");
  sampler.validate();
}

DecodeSession::DecodeSession(lm::LanguageModel& model, const MeterSpec& spec,
                             const DecodeConfig& config, std::shared_ptr<ScanCache> cache)
    : model_(model),
      config_(config),
      cache_(cache ? std::move(cache) : std::make_shared<ScanCache>(config.cache_capacity)),
      state_(spec, cache_, config.mask_enabled),
      rng_(config.seed) {
  config_.validate(model_.vocab().size());
  k_max_ = config_.resolved_k_max(model_.vocab().size());
  k_current_ = config_.k_init;
}

void DecodeSession::prime(std::span<const TokenId> prompt) {
  for (TokenId id : prompt) {
    state_.accept(model_.vocab().token(id));
    accepted_.push_back(id);
  }
}

std::vector<bool> DecodeSession::admissible(std::span<const Candidate> candidates,
                                           StepStats* stats) const {
  std::vector<bool> keep;
  keep.reserve(candidates.size());
  const auto& vocab = model_.vocab();
  for (const auto& c : candidates) {
    bool hit = false;
    const auto reason = state_.check(vocab.token(c.id), &hit);
    if (stats) {
      ++stats->examined;
      if (reason != MaskReason::Special && reason != MaskReason::Complete &&
          reason != MaskReason::RepeatedModifier && reason != MaskReason::RepeatedSeparator) {
        ++(hit ? stats->cache_hits : stats->cache_misses);
      }
    }
    keep.push_back(reason == MaskReason::Admitted);
  }
  return keep;
}

std::vector<Candidate> DecodeSession::allowed_mask(std::span<const Candidate> candidates,
                                                   StepStats* stats) const {
  const auto keep = admissible(candidates, stats);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (keep[i]) out.push_back(candidates[i]);
  }
  if (stats) stats->survived += out.size();
  renormalize(out);
  return out;
}

std::optional<TokenId> DecodeSession::step() {
  if (finished()) throw Error(ErrorCode::InvalidArgument, "session is already complete");
  const auto started = Clock::now();
  StepStats st;
  const auto& vocab = model_.vocab();

  auto t = Clock::now();
  auto query = model_.query(accepted_);
  st.model_s += seconds_since(t);

  std::size_t k = std::min(config_.k_init, k_max_);
  std::size_t examined = 0;
  std::vector<Candidate> survivors;
  StepRecord record;
  while (true) {
    t = Clock::now();
    const auto top = query->top(k);
    st.model_s += seconds_since(t);
    if (top.size() > examined) {
      const auto fresh = top.subspan(examined);
      t = Clock::now();
      const auto keep = admissible(fresh, &st);
      st.scan_s += seconds_since(t);
      for (std::size_t i = 0; i < fresh.size(); ++i) {
        if (keep[i]) survivors.push_back(fresh[i]);
        if (!on_step) continue;
        if (keep[i]) record.survivors.push_back(record.candidates.size());
        record.candidates.push_back(vocab.token(fresh[i].id));
      }
      examined = top.size();
    }
    if (!survivors.empty() || k >= k_max_) break;
    k = std::min(k_max_, std::max(k + 1, static_cast<std::size_t>(std::ceil(k * config_.k_growth))));
    ++st.escalations;
  }
  st.k = k;
  k_current_ = k;
  st.survived = survivors.size();

  std::optional<TokenId> chosen;
  if (!survivors.empty()) {
    renormalize(survivors);
    bool degraded = false;
    const SampleContext ctx{model_.representations(), accepted_};
    const std::size_t pick = sample(config_.sampler, survivors, rng_, ctx, &degraded);
    degraded_ = degraded_ || degraded;
    chosen = survivors[pick].id;
    state_.accept(vocab.token(*chosen));
    accepted_.push_back(*chosen);
    record.accepted = vocab.token(*chosen);
  }
  st.latency_s = seconds_since(started);
  stats_.push_back(st);
  if (on_step) on_step(record);
  return chosen;
}

GenerationSummary summarize(std::span<const StepStats> steps) {
  GenerationSummary s;
  double latency = 0, scan = 0;
  for (const auto& st : steps) {
    latency += st.latency_s;
    scan += st.scan_s;
    s.cache_hits += st.cache_hits;
    s.cache_misses += st.cache_misses;
    s.escalations += st.escalations;
    s.examined += st.examined;
    if (st.survived > 0) ++s.tokens;
  }
  if (s.tokens > 0) s.latency_mean_s = latency / static_cast<double>(s.tokens);
  if (latency > 0) {
    s.throughput_tok_s = static_cast<double>(s.tokens) / latency;
    s.scan_fraction = scan / latency;
  }
  const std::size_t lookups = s.cache_hits + s.cache_misses;
  if (lookups > 0) s.cache_hit_rate = static_cast<double>(s.cache_hits) / static_cast<double>(lookups);
  return s;
}

std::string decorate(const MeterSpec& spec, const std::string& text) {
  std::string out = text;
  while (!out.empty() && out.back() == ' ') out.pop_back();
  const bool has_danda = out.find("।") != std::string::npos || out.find("॥") != std::string::npos;
  const std::size_t half = (spec.pada_count / 2) * spec.pada_len;
  if (!has_danda && half > 0 && spec.pada_count >= 2) {
    for (auto pos = out.find(' '); pos != std::string::npos; pos = out.find(' ', pos + 1)) {
      const std::size_t before = syllabify(parse(out.substr(0, pos), Script::Devanagari)).size();
      if (before > half) break;
      if (before == half) {
        out.replace(pos, 1, " । ");
        break;
      }
    }
  }
  if (out.size() < 3 || out.compare(out.size() - 3, 3, "॥") != 0) out += " ॥";
  return out;
}

Generation generate(lm::LanguageModel& model, const MeterSpec& spec, const DecodeConfig& config,
                    std::span<const TokenId> prompt, std::shared_ptr<ScanCache> cache,
                    const std::function<void(const StepRecord&)>& on_step) {
  DecodeSession session(model, spec, config, std::move(cache));
  session.on_step = on_step;
  session.prime(prompt);
  const std::size_t max_steps =
      config.max_steps > 0 ? config.max_steps : 4 * session.state().max_syllables() + 16;

  Generation g;
  while (!session.finished()) {
    if (session.stats().size() >= max_steps) {
      g.dead_end = true;
      g.dead_end_reason = "step limit of " + std::to_string(max_steps) + " reached";
      break;
    }
    if (!session.step()) {
      g.dead_end = true;
      g.dead_end_reason = "no admissible candidate within k_max = " +
                          std::to_string(session.k_current());
      break;
    }
  }
  g.tokens = session.accepted();
  g.text = g.dead_end ? session.state().text() : decorate(spec, session.state().text());
  g.verdict = classify(spec, g.text);
  g.steps = session.stats();
  g.summary = summarize(g.steps);
  g.summary.dead_end = g.dead_end;
  g.summary.sampler_degraded = session.sampler_degraded();
  return g;
}

BenchReport bench(lm::LanguageModel& model, const MeterSpec& spec, const DecodeConfig& config,
                  std::size_t n, std::span<const std::vector<TokenId>> prompts) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "bench needs at least one generation");
  auto cache = std::make_shared<ScanCache>(config.cache_capacity);
  BenchReport r;
  std::vector<StepStats> all;
  const auto started = Clock::now();
  for (std::size_t i = 0; i < n; ++i) {
    DecodeConfig c = config;
    c.seed = config.seed + i;
    const auto prompt = prompts.empty() ? std::span<const TokenId>() : std::span(prompts[i % prompts.size()]);
    const auto g = generate(model, spec, c, prompt, cache);
    ++r.generations;
    if (g.dead_end) {
      ++r.dead_ends;
    } else {
      ++r.completed;
      if (g.verdict.kind == VerdictKind::Full) ++r.full;
    }
    all.insert(all.end(), g.steps.begin(), g.steps.end());
  }
  r.wall_s = seconds_since(started);
  const auto s = summarize(all);
  r.tokens = s.tokens;
  r.latency_mean_s = s.latency_mean_s;
  r.throughput_tok_s = s.throughput_tok_s;
  r.cache_hit_rate = s.cache_hit_rate;
  r.scan_fraction = s.scan_fraction;
  if (s.tokens > 0) r.escalation_rate = static_cast<double>(s.escalations) / static_cast<double>(s.tokens);
  return r;
}

}  // namespace chandas::decode
