#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <thread>

#include "chandas/decode.hpp"
#include "chandas/error.hpp"
#include "chandas/eval.hpp"
#include "chandas/lm_protocol.hpp"
#include "chandas/unicode.hpp"
#include "doctest.h"
#include "fake_channel.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace chandas;
using namespace chandas::decode;
using lm::TokenId;
using nlohmann::json;

namespace {

// Context-independent distribution over a hand-written vocabulary.
class TableModel final : public lm::LanguageModel {
 public:
  TableModel(std::vector<std::string> tokens, std::map<std::string, double> probs)
      : vocab_(std::move(tokens)) {
    for (TokenId id = 0; id < vocab_.size(); ++id) {
      const auto it = probs.find(vocab_.token(id));
      ranked_.push_back({id, it == probs.end() ? 0.0 : it->second});
    }
    std::stable_sort(ranked_.begin(), ranked_.end(),
                     [](const auto& a, const auto& b) { return a.prob > b.prob; });
  }

  const lm::Vocab& vocab() const override { return vocab_; }
  std::unique_ptr<lm::StepQuery> query(std::span<const TokenId>) override {
    ++queries;
    return std::make_unique<Query>(ranked_);
  }

  std::size_t queries = 0;

 private:
  struct Query final : lm::StepQuery {
    explicit Query(const std::vector<lm::Candidate>& r) : ranked(r) {}
    std::span<const lm::Candidate> top(std::size_t m) override {
      return {ranked.data(), std::min(m, ranked.size())};
    }
    const std::vector<lm::Candidate>& ranked;
  };

  lm::Vocab vocab_;
  std::vector<lm::Candidate> ranked_;
};

std::vector<std::string> with_specials(std::vector<std::string> rest) {
  std::vector<std::string> out{"<s>", "</s>", " "};
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

const std::vector<std::string>& corpus() {
  static const auto texts = [] {
    std::vector<std::string> out;
    for (const auto& r : eval::ingest(std::filesystem::path(CHANDAS_DATA_DIR) / "corpus" / "anustubh.jsonl")) {
      out.push_back(r.sanskrit);
    }
    return out;
  }();
  return texts;
}

lm::NgramModel& reference_model() {
  static auto model = lm::NgramModel::train(corpus());
  return model;
}

MeterSpec single_pada() {
  MeterSpec s = anustubh();
  s.name = "anustubh-pada";
  s.pada_count = 1;
  s.constraints.resize(8);
  return s;
}

MeterSpec tiny_meter(std::string_view lg) {
  MeterSpec s;
  s.name = "tiny";
  s.pada_count = 1;
  s.pada_len = lg.size();
  for (char c : lg) {
    s.constraints.push_back(c == 'l'   ? PositionConstraint::MustLaghu
                            : c == 'g' ? PositionConstraint::MustGuru
                                       : PositionConstraint::Any);
  }
  return s;
}

bool ends_in_separator(const std::string& text) {
  if (text.empty()) return true;
  const auto cps = unicode::decode(text);
  return devanagari_role(cps.back()) == DevanagariRole::Separator;
}

// Independent restatement of the mask: well-formedness rules, then the
// phoneme-window weight oracle and the per-position constraint check.
bool oracle_admits(const MeterSpec& spec, const std::string& text, const std::string& last,
                   const std::string& token) {
  const auto kind = lm::classify_token(token);
  if (kind == lm::TokenKind::Special) return false;
  if (kind == lm::TokenKind::ModifierOnly && token == last) return false;
  if (kind == lm::TokenKind::Separator && ends_in_separator(text)) return false;
  PhonemeSequence seq;
  try {
    seq = parse(text + token, Script::Devanagari);
  } catch (const Error&) {
    return false;
  }
  const auto windows = testing::oracle_windows(seq.phonemes);
  if (windows.size() > spec.total()) return false;
  const auto streaming = testing::oracle_weights(seq.phonemes, false);
  bool determinate = true;
  if (!windows.empty()) {
    const auto& w = windows.back();
    determinate = class_of(w.nucleus) == PhonemeClass::LongVowel || w.mark || w.consonants_after >= 2;
  }
  if (!testing::oracle_prefix(spec, streaming, determinate)) return false;
  if (windows.size() == spec.total()) {
    return testing::oracle_prefix(spec, testing::oracle_weights(seq.phonemes, true), true);
  }
  return true;
}

DecodeConfig config_with(SamplerKind kind, std::uint64_t seed) {
  DecodeConfig c;
  c.sampler.kind = kind;
  c.seed = seed;
  return c;
}

}  // namespace

// ---- mask rules -------------------------------------------------------------

TEST_CASE("a determinate guru at position 5 is masked") {
  MeterState state(anustubh(), nullptr);
  for (int i = 0; i < 4; ++i) state.accept("क");
  CHECK(state.syllables() == 4);
  CHECK(state.check("का") == MaskReason::PrefixViolation);
  CHECK(state.check("कं") == MaskReason::PrefixViolation);
  CHECK(state.check("क") == MaskReason::Admitted);
  CHECK(state.check("कि") == MaskReason::Admitted);
}

TEST_CASE("an empty session admits every token that parses on its own") {
  const auto& vocab = reference_model().vocab();
  const auto spec = anustubh();
  std::size_t letters = 0;
  for (const auto& t : vocab.tokens()) {
    if (lm::classify_token(t) != lm::TokenKind::Letter) continue;
    bool parses = true;
    try {
      parse(t, Script::Devanagari);
    } catch (const Error&) {
      parses = false;
    }
    if (!parses || syllabify(t).size() > 4) continue;
    ++letters;
    MeterState state(spec, nullptr);
    CHECK_MESSAGE(state.check(t) == MaskReason::Admitted, t);
  }
  CHECK(letters > 100);
}

TEST_CASE("a lone matra after a separator is masked as malformed") {
  MeterState state(anustubh(), nullptr);
  state.accept("क");
  state.accept(" ");
  CHECK(state.check("ा") == MaskReason::Unparseable);
  try {
    parse("क ा", Script::Devanagari);
    FAIL("parse accepted a matra after a space");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedCluster);
  }
}

TEST_CASE("admissibility extras") {
  MeterState state(anustubh(), nullptr);
  CHECK(state.check(" ") == MaskReason::RepeatedSeparator);
  CHECK(state.check("।") == MaskReason::RepeatedSeparator);
  CHECK(state.check("<s>") == MaskReason::Special);
  CHECK(state.check("</s>") == MaskReason::Special);
  state.accept("रा");
  state.accept("ं");
  CHECK(state.check("ं") == MaskReason::RepeatedModifier);
  state.accept(" ");
  CHECK(state.check(" ") == MaskReason::RepeatedSeparator);
  CHECK(state.check("।") == MaskReason::RepeatedSeparator);
  CHECK_THROWS_AS(state.accept(" "), Error);
}

TEST_CASE("length limit, final closing and completion") {
  MeterState state(tiny_meter("lg"), nullptr);
  state.accept("क");
  // a closing short vowel is laghu, which the last slot forbids
  CHECK(state.check("क") == MaskReason::FinalViolation);
  CHECK(state.check("का") == MaskReason::Admitted);
  CHECK(state.check("काक") == MaskReason::TooLong);
  state.accept("का");
  CHECK(state.complete());
  CHECK(state.check("क") == MaskReason::Complete);
  state.reset();
  CHECK(state.text().empty());
  CHECK(state.syllables() == 0);
}

TEST_CASE("mask-disabled state keeps only well-formedness and length") {
  MeterState state(anustubh(), nullptr, false);
  for (int i = 0; i < 4; ++i) state.accept("क");
  CHECK(state.check("का") == MaskReason::Admitted);
  CHECK(state.check("ाा") == MaskReason::Unparseable);
  MeterState tiny(tiny_meter("lg"), nullptr, false);
  tiny.accept("क");
  CHECK(tiny.check("क") == MaskReason::Admitted);
  CHECK(tiny.check("ककक") == MaskReason::TooLong);
}

TEST_CASE("the ground-truth verse streams through the mask token by token") {
  const std::string verse =
      "खरं तु विरथं रामो गदापाणिमवस्थितम् । मृदुपूर्वं महातेजाः परुषं वाक्यमब्रवीत् ॥";
  const auto& vocab = reference_model().vocab();
  MeterState state(anustubh(), nullptr);
  const auto ids = vocab.tokenize(verse);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& t = vocab.token(ids[i]);
    if (state.complete()) break;
    REQUIRE_MESSAGE(state.check(t) == MaskReason::Admitted, "token ", i, " '", t, "'");
    state.accept(t);
  }
  CHECK(state.complete());
}

// ---- cache ---------------------------------------------------------------------

TEST_CASE("scan cache is an LRU keyed on text") {
  ScanCache cache(2);
  bool hit = true;
  cache.get("क", &hit);
  CHECK_FALSE(hit);
  cache.get("क", &hit);
  CHECK(hit);
  cache.get("ख", &hit);
  cache.get("क", &hit);  // refresh क
  cache.get("ग", &hit);  // evicts ख
  CHECK(cache.size() == 2);
  cache.get("ख", &hit);
  CHECK_FALSE(hit);
  cache.get("ग", &hit);
  CHECK(hit);
  CHECK(cache.hits() == 3);
  CHECK(cache.misses() == 4);
}

TEST_CASE("a zero-capacity cache stores nothing and still scans") {
  ScanCache cache(0);
  bool hit = true;
  const auto s = cache.get("रामो", &hit);
  CHECK_FALSE(hit);
  CHECK(cache.size() == 0);
  CHECK(s.parsed);
  CHECK(s.syllables == 2);
  CHECK(s.final.str() == "gg");
  CHECK_FALSE(cache.get("ा").parsed);
}

// ---- samplers -------------------------------------------------------------------

TEST_CASE("greedy takes the argmax") {
  const std::vector<lm::Candidate> s{{7, 0.6}, {3, 0.4}};
  Rng rng(1);
  CHECK(sample(SamplerSpec{}, s, rng) == 0);
}

TEST_CASE("stochastic samplers respect their support and weights") {
  const std::vector<lm::Candidate> s{{0, 0.5}, {1, 0.3}, {2, 0.15}, {3, 0.05}};
  const int n = 40000;
  auto freq = [&](SamplerSpec spec) {
    Rng rng(42);
    std::vector<double> f(s.size());
    for (int i = 0; i < n; ++i) f[sample(spec, s, rng)] += 1.0 / n;
    return f;
  };

  SamplerSpec multi{SamplerKind::Multinomial};
  const auto fm = freq(multi);
  std::vector<double> expect;
  double z = 0;
  for (const auto& c : s) z += std::pow(c.prob, 1 / 0.7);
  for (const auto& c : s) expect.push_back(std::pow(c.prob, 1 / 0.7) / z);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(fm[i] == doctest::Approx(expect[i]).epsilon(0.05));

  SamplerSpec nucleus{SamplerKind::Nucleus};
  const auto fn = freq(nucleus);
  CHECK(fn[3] == 0.0);  // 0.5 + 0.3 + 0.15 already covers p = 0.9
  CHECK(fn[0] == doctest::Approx(0.5 / 0.95).epsilon(0.05));

  SamplerSpec topk{SamplerKind::TopK};
  topk.top_k = 2;
  const auto ft = freq(topk);
  CHECK(ft[2] == 0.0);
  CHECK(ft[3] == 0.0);
  CHECK(ft[0] == doctest::Approx(0.5 / 0.8).epsilon(0.05));
}

TEST_CASE("contrastive search penalises tokens similar to the history") {
  std::vector<lm::Representation> reps(3, lm::Representation{});
  reps[0][0] = 1;  // A, same direction as the history token
  reps[1][1] = 1;  // B, orthogonal
  reps[2][0] = 1;  // H
  const std::vector<lm::Candidate> s{{0, 0.6}, {1, 0.4}};
  const std::vector<TokenId> history{2};
  Rng rng(1);
  bool degraded = true;
  // A: 0.4 * 0.6 - 0.6 * 1 = -0.36; B: 0.4 * 0.4 - 0.6 * 0 = 0.16
  CHECK(sample(SamplerSpec{SamplerKind::Contrastive}, s, rng, {&reps, history}, &degraded) == 1);
  CHECK_FALSE(degraded);
  // no history, no penalty: probability decides
  CHECK(sample(SamplerSpec{SamplerKind::Contrastive}, s, rng, {&reps, {}}, &degraded) == 0);
  CHECK(sample(SamplerSpec{SamplerKind::Contrastive}, s, rng, {nullptr, history}, &degraded) == 0);
  CHECK(degraded);
}

TEST_CASE("sampler and config validation") {
  SamplerSpec bad;
  bad.temperature = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.top_p = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.top_k = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(sampler_from_string("nucleus") == SamplerKind::Nucleus);
  CHECK_FALSE(sampler_from_string("beam"));

  DecodeConfig c;
  CHECK_NOTHROW(c.validate(100));
  CHECK_THROWS_AS(c.validate(10), Error);  // k_init 25 > |V|
  c.k_init = 0;
  CHECK_THROWS_AS(c.validate(100), Error);
  c.k_init = 5;
  c.k_max = 200;
  CHECK_THROWS_AS(c.validate(100), Error);
  c.k_max = 4;
  CHECK_THROWS_AS(c.validate(100), Error);
  c.k_max = 50;
  c.k_growth = 1.0;
  CHECK_THROWS_AS(c.validate(100), Error);
}

// ---- stepping ------------------------------------------------------------------

TEST_CASE("forced move: only the scannable token is ever chosen") {
  TableModel model(with_specials({"ा", "क"}), {{"ा", 0.99}, {"क", 0.01}});
  for (auto kind : {SamplerKind::Greedy, SamplerKind::Multinomial, SamplerKind::TopK}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      DecodeConfig c = config_with(kind, seed);
      c.k_init = 2;
      DecodeSession session(model, anustubh(), c);
      const auto id = session.step();
      REQUIRE(id);
      CHECK(model.vocab().token(*id) == "क");
    }
  }
}

TEST_CASE("greedy step picks the more probable survivor") {
  TableModel model(with_specials({"क", "ख"}), {{"क", 0.6}, {"ख", 0.4}});
  DecodeConfig c;
  c.k_init = 2;
  DecodeSession session(model, anustubh(), c);
  const auto survivors = session.allowed_mask(std::vector<lm::Candidate>{{3, 0.6}, {4, 0.4}});
  REQUIRE(survivors.size() == 2);
  CHECK(survivors[0].prob == doctest::Approx(0.6));
  const auto id = session.step();
  REQUIRE(id);
  CHECK(model.vocab().token(*id) == "क");
}

TEST_CASE("allowed_mask renormalizes over survivors") {
  TableModel model(with_specials({"ा", "क", "ख"}), {});
  DecodeSession session(model, anustubh(), [] {
    DecodeConfig c;
    c.k_init = 3;
    return c;
  }());
  const auto v = model.vocab();
  const std::vector<lm::Candidate> cands{{*v.find("ा"), 0.5}, {*v.find("क"), 0.3}, {*v.find("ख"), 0.2}};
  StepStats st;
  const auto out = session.allowed_mask(cands, &st);
  REQUIRE(out.size() == 2);
  CHECK(out[0].prob == doctest::Approx(0.6));
  CHECK(out[1].prob == doctest::Approx(0.4));
  CHECK(st.examined == 3);
  CHECK(st.survived == 2);
}

TEST_CASE("escalation: the top-25 all break position 6") {
  // After five light syllables, a two-syllable token starting with a short
  // open syllable fixes position 6 as laghu; Anustubh wants guru there.
  std::vector<std::string> bad;
  const std::vector<std::string> cons{"क", "ख", "ग", "घ", "च", "छ", "ज", "झ", "ट", "ठ", "ड", "ढ", "त",
                                      "थ", "द", "ध", "न", "प", "फ", "ब", "भ", "म", "य", "र", "ल"};
  for (const auto& c : cons) bad.push_back("न" + c);
  REQUIRE(bad.size() == 25);
  std::map<std::string, double> probs;
  for (std::size_t i = 0; i < bad.size(); ++i) probs[bad[i]] = 0.03 - 0.0005 * double(i);
  probs["का"] = 0.001;
  auto tokens = bad;
  tokens.push_back("का");
  tokens.push_back("क");
  TableModel model(with_specials(tokens), probs);

  DecodeConfig c;
  c.k_init = 25;
  DecodeSession session(model, anustubh(), c);
  const auto k = *model.vocab().find("क");
  session.prime(std::vector<TokenId>(5, k));
  REQUIRE(session.state().syllables() == 5);

  const auto id = session.step();
  REQUIRE(id);
  CHECK(model.vocab().token(*id) == "का");
  const auto& st = session.stats().back();
  CHECK(st.escalations >= 1);
  CHECK(st.examined > 25);
  CHECK(st.survived == 3);  // का, क and the space
  CHECK(session.k_current() <= model.vocab().size());
}

TEST_CASE("dead end only after k_max candidates") {
  TableModel model(with_specials({"ा", "ि", "।"}), {{"ा", 0.4}, {"ि", 0.3}, {"।", 0.2}, {" ", 0.1}});
  DecodeConfig c;
  c.k_init = 1;
  DecodeSession session(model, anustubh(), c);
  CHECK_FALSE(session.step());
  const auto& st = session.stats().back();
  CHECK(st.examined == model.vocab().size());
  CHECK(st.k == model.vocab().size());
  CHECK(st.escalations == 3);  // 1, 2, 4, 6
  CHECK(session.k_current() == model.vocab().size());

  const auto g = generate(model, anustubh(), c);
  CHECK(g.dead_end);
  CHECK(g.summary.dead_end);
  CHECK(g.verdict.kind == VerdictKind::Invalid);
  CHECK_FALSE(g.dead_end_reason.empty());
}

TEST_CASE("a model that never adds syllables hits the step limit") {
  TableModel model(with_specials({"क्"}), {{"क्", 1.0}});
  DecodeConfig c;
  c.k_init = 1;
  c.max_steps = 12;
  const auto g = generate(model, anustubh(), c);
  CHECK(g.dead_end);
  CHECK(g.steps.size() == 12);
}

TEST_CASE("protocol models are re-asked for a wider top-m on escalation") {
  const std::vector<std::string> tokens = with_specials({"।", "क"});
  const lm::Vocab vocab(tokens);
  auto channel = std::make_unique<testing::ScriptedChannel>([&](const std::string& line) {
    const auto f = json::parse(line);
    if (f["type"] == "hello") return std::vector<std::string>{json{{"type", "ok"}, {"vocab_size", 5}}.dump()};
    if (f["type"] != "next") return std::vector<std::string>{};
    const auto m = f["m"].get<std::size_t>();
    json top = json::array({{2, std::log(0.5)}, {3, std::log(0.3)}});  // both separators
    if (m > 2) top.push_back({4, std::log(0.2)});
    return std::vector<std::string>{json{{"type", "dist"}, {"top", top}}.dump()};
  });
  auto* raw = channel.get();
  lm::RemoteModel remote(std::move(channel), vocab);
  DecodeConfig c;
  c.k_init = 2;
  DecodeSession session(remote, anustubh(), c);
  const auto id = session.step();
  REQUIRE(id);
  CHECK(vocab.token(*id) == "क");
  CHECK(session.stats().back().escalations == 1);
  std::vector<std::size_t> asked;
  for (const auto& s : raw->sent) {
    const auto f = json::parse(s);
    if (f["type"] == "next") asked.push_back(f["m"].get<std::size_t>());
  }
  CHECK(asked == std::vector<std::size_t>{2, 4});
}

TEST_CASE("k_current never exceeds k_max") {
  auto& model = reference_model();
  DecodeConfig c = config_with(SamplerKind::Multinomial, 5);
  c.k_init = 3;
  c.k_max = 40;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    DecodeSession session(model, anustubh(), c);
    while (!session.finished() && session.stats().size() < 200) {
      if (!session.step()) break;
      CHECK(session.k_current() <= 40);
      CHECK(session.stats().back().examined <= 40);
    }
  }
}

// ---- generation -------------------------------------------------------------------

TEST_CASE("seeded generations complete as Full and agree with the mask oracle") {
  auto& model = reference_model();
  const auto spec = anustubh();
  std::size_t completed = 0, checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto kind = static_cast<SamplerKind>(seed % 5);
    std::string text, last;
    const auto g = generate(model, spec, config_with(kind, seed), {}, nullptr, [&](const StepRecord& r) {
      std::vector<std::size_t> expect;
      for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        if (oracle_admits(spec, text, last, r.candidates[i])) expect.push_back(i);
      }
      CHECK(expect == r.survivors);
      checked += r.candidates.size();
      text += r.accepted;
      last = r.accepted;
      if (!text.empty()) {
        const auto w = weigh(syllabify(text), WeighMode::Streaming);
        CHECK(prefix_ok(*compile(spec), w));
      }
    });
    if (g.dead_end) continue;
    ++completed;
    CHECK(g.verdict.kind == VerdictKind::Full);
    CHECK(g.verdict.syllables == 32);
    CHECK(g.text.find("॥") != std::string::npos);
  }
  CHECK(completed >= 95);
  CHECK(checked > 10000);
}

TEST_CASE("single-pada meter yields exactly eight syllables") {
  auto& model = reference_model();
  const auto spec = single_pada();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = generate(model, spec, config_with(SamplerKind::Multinomial, seed));
    REQUIRE_FALSE(g.dead_end);
    CHECK(g.verdict.syllables == 8);
    CHECK(g.verdict.kind == VerdictKind::Full);
    CHECK(g.text.size() > 4);
    CHECK(g.text.compare(g.text.size() - 4, 4, " ॥") == 0);
  }
}

TEST_CASE("fixed seed and greedy give identical generations") {
  auto& model = reference_model();
  for (auto kind : {SamplerKind::Greedy, SamplerKind::Nucleus}) {
    const auto a = generate(model, anustubh(), config_with(kind, 7));
    const auto b = generate(model, anustubh(), config_with(kind, 7));
    CHECK(a.tokens == b.tokens);
    CHECK(a.text == b.text);
    CHECK(a.summary.cache_hits == b.summary.cache_hits);
    CHECK(a.summary.examined == b.summary.examined);
    CHECK(a.summary.escalations == b.summary.escalations);
  }
}

TEST_CASE("cache capacity does not change outputs") {
  auto& model = reference_model();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto with = config_with(static_cast<SamplerKind>(seed % 5), seed);
    auto without = with;
    without.cache_capacity = 0;
    const auto a = generate(model, anustubh(), with);
    const auto b = generate(model, anustubh(), without);
    CHECK(a.tokens == b.tokens);
    CHECK(a.text == b.text);
    CHECK(b.summary.cache_hits == 0);
  }
}

TEST_CASE("a cache shared across threads does not change outputs") {
  auto& model = reference_model();
  const auto spec = anustubh();
  std::vector<std::string> solo(8), shared(8);
  for (std::size_t i = 0; i < 8; ++i) {
    solo[i] = generate(model, spec, config_with(SamplerKind::TopK, i)).text;
  }
  auto cache = std::make_shared<ScanCache>(1000);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < 2; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < 8; i += 2) {
        shared[i] = generate(model, spec, config_with(SamplerKind::TopK, i), {}, cache).text;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(solo == shared);
}

TEST_CASE("prompts become verse text and must scan") {
  auto& model = reference_model();
  const auto& vocab = model.vocab();
  const auto prompt = vocab.tokenize("धर्मक्षेत्रे");
  const auto g = generate(model, anustubh(), config_with(SamplerKind::Greedy, 1), prompt);
  REQUIRE_FALSE(g.dead_end);
  CHECK(g.text.rfind("धर्मक्षेत्रे", 0) == 0);
  CHECK(g.verdict.kind == VerdictKind::Full);
  const auto fine = vocab.tokenize("कककका");  // guru at position 4 is allowed
  CHECK_NOTHROW(generate(model, anustubh(), config_with(SamplerKind::Greedy, 1), fine));
  CHECK_THROWS_AS(generate(model, anustubh(), config_with(SamplerKind::Greedy, 1),
                           vocab.tokenize("ककककका")),
                  Error);
}

TEST_CASE("decoration") {
  const auto spec = anustubh();
  const std::string plain =
      "खरं तु विरथं रामो गदापाणिमवस्थितम् मृदुपूर्वं महातेजाः परुषं वाक्यमब्रवीत्";
  CHECK(decorate(spec, plain) ==
        "खरं तु विरथं रामो गदापाणिमवस्थितम् । मृदुपूर्वं महातेजाः परुषं वाक्यमब्रवीत् ॥");
  CHECK(decorate(spec, "क । ख") == "क । ख ॥");
  CHECK(decorate(spec, "क ॥") == "क ॥");
  CHECK(decorate(single_pada(), "कककककाकक") == "कककककाकक ॥");
}

// ---- bench ------------------------------------------------------------------------

TEST_CASE("one-token bench: throughput is the inverse of latency") {
  TableModel model(with_specials({"क"}), {{"क", 1.0}});
  DecodeConfig c;
  c.k_init = 1;
  const auto r = bench(model, tiny_meter("."), c, 1);
  CHECK(r.tokens == 1);
  CHECK(r.completed == 1);
  CHECK(r.full == 1);
  CHECK(r.latency_mean_s > 0);
  CHECK(r.throughput_tok_s == doctest::Approx(1.0 / r.latency_mean_s));
  CHECK_THROWS_AS(bench(model, tiny_meter("."), c, 0), Error);
}

TEST_CASE("bench aggregates over a shared cache") {
  auto& model = reference_model();
  DecodeConfig c;
  c.cache_capacity = 20000;
  const std::vector<std::vector<TokenId>> prompts{model.vocab().tokenize("राम")};
  const auto r = bench(model, anustubh(), c, 5, prompts);
  CHECK(r.generations == 5);
  CHECK(r.completed + r.dead_ends == 5);
  CHECK(r.full == r.completed);
  CHECK(r.cache_hit_rate > 0.5);  // the same greedy run five times
  CHECK(r.scan_fraction > 0);
  CHECK(r.scan_fraction <= 1.0);
}
