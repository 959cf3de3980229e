#pragma once

// Token-probability sources: an akshara-level vocabulary and tokenizer, an
// add-k backoff n-gram model, and the interface the decoder queries.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chandas::lm {

using TokenId = std::uint32_t;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kSep = " ";

// Splits Devanagari text into aksharas ((C virama)* C [sign|virama] [marks],
// or V [marks]) and maximal separator runs. Codepoints that fit neither are
// returned one at a time.
std::vector<std::string> segment_aksharas(std::string_view devanagari);

enum class TokenKind : std::uint8_t { Special, Separator, ModifierOnly, Letter };

// Classification of a token string: a run of separators, only dependent
// signs (matra, virama, anusvara, visarga), or anything containing a letter.
TokenKind classify_token(std::string_view token);

class Vocab {
 public:
  Vocab() = default;
  // Tokens must be unique; ids follow the given order.
  explicit Vocab(std::vector<std::string> tokens);

  // Specials first, then the single-codepoint inventory and every akshara and
  // separator run seen in the corpus, sorted bytewise. Texts may be IAST.
  static Vocab build(std::span<const std::string> corpus);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  TokenKind kind(TokenId id) const { return kinds_.at(id); }

  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenId sep() const { return sep_; }

  // Greedy longest match; any text parse() accepts is encodable. IAST input
  // is transliterated to Devanagari first.
  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> ids) const;

  // SHA-256 hex of the canonical JSON token list.
  std::string digest() const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<TokenKind> kinds_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_token_bytes_ = 0;
  TokenId bos_ = 0, eos_ = 0, sep_ = 0;
};

struct Candidate {
  TokenId id;
  double prob;
};

inline constexpr std::size_t kRepDim = 64;
using Representation = std::array<float, kRepDim>;

// Next-token distribution for one context. top(m) returns the m most probable
// ids in descending order (ties by id); asking for more than before widens the
// slice, which for remote models means a new request.
class StepQuery {
 public:
  virtual ~StepQuery() = default;
  virtual std::span<const Candidate> top(std::size_t m) = 0;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocab& vocab() const = 0;
  virtual std::unique_ptr<StepQuery> query(std::span<const TokenId> context) = 0;
  // Unit-norm vectors per id, or nullptr when the model has none.
  virtual const std::vector<Representation>* representations() const { return nullptr; }
};

struct NextDistribution {
  std::vector<double> probs;
};

class NgramModel final : public LanguageModel {
 public:
  static constexpr std::size_t kDefaultOrder = 4;
  static constexpr std::size_t kMaxOrder = 16;
  static constexpr double kDefaultSmoothing = 0.01;

  // Raises Error(EmptyCorpus) on an empty corpus.
  static NgramModel train(std::span<const std::string> corpus, std::size_t order = kDefaultOrder,
                          double smoothing = kDefaultSmoothing);
  static NgramModel train(std::span<const std::string> corpus, Vocab vocab, std::size_t order,
                          double smoothing);

  // P_0 = 1/|V|; P_m(w|h) = (c(h,w) + k|V| P_{m-1}(w|h')) / (c(h) + k|V|),
  // falling back to P_{m-1} when c(h) = 0. Contexts are BOS padded.
  // Raises Error(UnknownId) for ids outside the vocab.
  NextDistribution next(std::span<const TokenId> context) const;

  // Average negative log2 probability per token (EOS included), as 2^x.
  double perplexity(std::span<const std::string> texts) const;

  const Vocab& vocab() const override { return vocab_; }
  std::unique_ptr<StepQuery> query(std::span<const TokenId> context) override;
  const std::vector<Representation>* representations() const override { return &reps_; }

  std::size_t order() const { return order_; }
  double smoothing() const { return smoothing_; }

  std::string to_json() const;
  static NgramModel from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static NgramModel load(const std::filesystem::path& path);

 private:
  struct Follow {
    std::uint32_t total = 0;
    std::vector<std::pair<TokenId, std::uint32_t>> counts;  // sorted by id
  };
  using Level = std::unordered_map<std::string, Follow>;  // keyed by 3-byte ids

  NgramModel(Vocab vocab, std::size_t order, double smoothing);
  static std::string key(std::span<const TokenId> ctx);
  static std::vector<TokenId> unkey(std::string_view key);
  void count_stream(std::span<const TokenId> ids);
  void finish();

  Vocab vocab_;
  std::size_t order_;
  double smoothing_;
  std::vector<Level> levels_;  // levels_[m] holds contexts of length m
  std::vector<Representation> reps_;
};

}  // namespace chandas::lm
