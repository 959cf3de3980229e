#pragma once

// Metre-constrained decoding: each step takes the model's top-k candidates,
// masks those whose tentative text cannot lead to a valid verse, widens k when
// nothing survives, and samples from the renormalized survivors.

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chandas/lm.hpp"
#include "chandas/meter.hpp"
#include "chandas/prosody.hpp"

namespace chandas::decode {

using lm::Candidate;
using lm::TokenId;

// ---- scansion cache -------------------------------------------------------

struct Scan {
  bool parsed = false;
  std::size_t syllables = 0;
  WeightString streaming;
  WeightString final;
};

Scan scan_text(const std::string& devanagari);

// LRU map from tentative text to its scan. Safe to share between sessions;
// capacity 0 disables storage.
class ScanCache {
 public:
  explicit ScanCache(std::size_t capacity);

  Scan get(const std::string& text, bool* hit = nullptr);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  using Entry = std::pair<std::string, Scan>;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<std::string_view, std::list<Entry>::iterator> index_;  // views into order_
  std::size_t hits_ = 0, misses_ = 0;
};

// ---- metre state over token strings ----------------------------------------

enum class MaskReason : std::uint8_t {
  Admitted,
  Special,
  RepeatedModifier,
  RepeatedSeparator,
  Unparseable,
  TooLong,
  PrefixViolation,
  FinalViolation,
  Complete,
};

std::string_view to_string(MaskReason r);

// Accepted text plus the checks a candidate token must pass to extend it.
// With enforce_meter off only the well-formedness and length rules apply.
class MeterState {
 public:
  MeterState(const MeterSpec& spec, std::shared_ptr<ScanCache> cache, bool enforce_meter = true);

  MaskReason check(std::string_view token, bool* cache_hit = nullptr) const;
  bool admits(std::string_view token) const { return check(token) == MaskReason::Admitted; }

  // Raises Error(InvalidArgument) for a token check() rejects.
  void accept(std::string_view token);
  void reset();

  const MeterSpec& spec() const { return filters_->spec(); }
  const FilterSet& filters() const { return *filters_; }
  const std::string& text() const { return text_; }
  std::size_t syllables() const { return scan_.syllables; }
  const WeightString& weights() const { return scan_.streaming; }
  std::size_t max_syllables() const { return filters_->max_length(); }
  bool complete() const { return syllables() == max_syllables(); }
  bool enforces_meter() const { return enforce_; }

 private:
  std::shared_ptr<const FilterSet> filters_;
  std::shared_ptr<ScanCache> cache_;
  bool enforce_;
  std::string text_;
  std::string last_token_;
  Scan scan_;
};

// ---- sampling ---------------------------------------------------------------

enum class SamplerKind : std::uint8_t { Greedy, Multinomial, Nucleus, TopK, Contrastive };

std::string_view to_string(SamplerKind k);
std::optional<SamplerKind> sampler_from_string(std::string_view name);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Greedy;
  double temperature = 0.7;
  double top_p = 0.9;
  std::size_t top_k = 10;
  double alpha = 0.6;
  std::size_t contrastive_k = 4;

  // Raises Error(InvalidArgument) on out-of-range parameters.
  void validate() const;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct SampleContext {
  const std::vector<lm::Representation>* reps = nullptr;
  std::span<const TokenId> history;
};

// Picks an index into `survivors`, which must be nonempty, sorted by
// descending probability and normalized. Sets *degraded when contrastive
// search falls back to greedy for lack of representations.
std::size_t sample(const SamplerSpec& spec, std::span<const Candidate> survivors, Rng& rng,
                   const SampleContext& ctx = {}, bool* degraded = nullptr);

// ---- decoding -----------------------------------------------------------------

struct DecodeConfig {
  std::size_t k_init = 25;
  std::optional<std::size_t> k_max;  // vocab size when unset
  double k_growth = 2.0;
  SamplerSpec sampler;
  std::size_t cache_capacity = 1000;
  std::uint64_t seed = 0;
  bool mask_enabled = true;
  std::size_t max_steps = 0;  // 4 * max_syllables + 16 when 0

  // Raises Error(InvalidArgument) unless 1 <= k_init <= k_max <= vocab_size
  // and k_growth > 1.
  void validate(std::size_t vocab_size) const;
  std::size_t resolved_k_max(std::size_t vocab_size) const { return k_max.value_or(vocab_size); }
};

struct StepStats {
  double latency_s = 0;
  double model_s = 0;
  double scan_s = 0;
  std::size_t examined = 0;
  std::size_t survived = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t escalations = 0;
  std::size_t k = 0;
};

// One masked step as seen by the mask: every candidate string examined, the
// indices that survived, and the token accepted (empty on a dead end).
struct StepRecord {
  std::vector<std::string> candidates;
  std::vector<std::size_t> survivors;
  std::string accepted;
};

class DecodeSession {
 public:
  DecodeSession(lm::LanguageModel& model, const MeterSpec& spec, const DecodeConfig& config,
                std::shared_ptr<ScanCache> cache = nullptr);

  // Accepts prompt tokens as verse text; raises Error(InvalidArgument) if one
  // is inadmissible.
  void prime(std::span<const TokenId> prompt);

  // Survivors of `candidates` (descending order kept) with probabilities
  // renormalized over the survivors.
  std::vector<Candidate> allowed_mask(std::span<const Candidate> candidates,
                                      StepStats* stats = nullptr) const;

  // Returns the accepted token, or nullopt on a dead end.
  std::optional<TokenId> step();

  bool finished() const { return state_.complete(); }
  const MeterState& state() const { return state_; }
  const std::vector<TokenId>& accepted() const { return accepted_; }
  const std::vector<StepStats>& stats() const { return stats_; }
  std::size_t k_current() const { return k_current_; }
  bool sampler_degraded() const { return degraded_; }
  const ScanCache& cache() const { return *cache_; }

  std::function<void(const StepRecord&)> on_step;

 private:
  std::vector<bool> admissible(std::span<const Candidate> candidates, StepStats* stats) const;

  lm::LanguageModel& model_;
  DecodeConfig config_;
  std::shared_ptr<ScanCache> cache_;
  MeterState state_;
  Rng rng_;
  std::vector<TokenId> accepted_;
  std::vector<StepStats> stats_;
  std::size_t k_max_;
  std::size_t k_current_;
  bool degraded_ = false;
};

struct GenerationSummary {
  std::size_t tokens = 0;
  double latency_mean_s = 0;
  double throughput_tok_s = 0;
  double scan_fraction = 0;
  double cache_hit_rate = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t escalations = 0;
  std::size_t examined = 0;
  bool dead_end = false;
  bool sampler_degraded = false;
};

GenerationSummary summarize(std::span<const StepStats> steps);

struct Generation {
  std::vector<TokenId> tokens;
  std::string text;  // Devanagari with danda decoration when complete
  Verdict verdict;
  bool dead_end = false;
  std::string dead_end_reason;
  std::vector<StepStats> steps;
  GenerationSummary summary;
};

// Adds " ।" at the first space after the first half-verse and a closing " ॥",
// unless the text already carries dandas.
std::string decorate(const MeterSpec& spec, const std::string& text);

Generation generate(lm::LanguageModel& model, const MeterSpec& spec, const DecodeConfig& config,
                    std::span<const TokenId> prompt = {}, std::shared_ptr<ScanCache> cache = nullptr,
                    const std::function<void(const StepRecord&)>& on_step = {});

struct BenchReport {
  std::size_t generations = 0;
  std::size_t completed = 0;
  std::size_t dead_ends = 0;
  std::size_t tokens = 0;
  double wall_s = 0;
  double latency_mean_s = 0;  // per token
  double throughput_tok_s = 0;
  double cache_hit_rate = 0;
  double escalation_rate = 0;  // escalations per token
  double scan_fraction = 0;
  std::size_t full = 0;
};

// Runs n generations with seeds config.seed .. config.seed + n - 1 over one
// shared cache, cycling through `prompts` when given.
BenchReport bench(lm::LanguageModel& model, const MeterSpec& spec, const DecodeConfig& config,
                  std::size_t n, std::span<const std::vector<TokenId>> prompts = {});

}  // namespace chandas::decode
