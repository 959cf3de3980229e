#include "chandas/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chandas/digest.hpp"
#include "chandas/error.hpp"
#include "chandas/script.hpp"
#include "chandas/unicode.hpp"
#include "json.hpp"

namespace chandas::lm {
namespace {

using json = nlohmann::json;
using R = DevanagariRole;

constexpr char32_t kVirama = U'्';
constexpr unsigned kIdBits = 24;

std::string to_devanagari(std::string_view text) {
  const std::string normalized = unicode::nfc(text);
  if (detect_script(normalized) == Script::Devanagari) return normalized;
  return transliterate(normalized, Script::Iast, Script::Devanagari);
}

class NgramStepQuery final : public StepQuery {
 public:
  explicit NgramStepQuery(const std::vector<double>& probs) {
    all_.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) all_.push_back({static_cast<TokenId>(i), probs[i]});
  }

  std::span<const Candidate> top(std::size_t m) override {
    m = std::min(m, all_.size());
    if (m > sorted_) {
      std::partial_sort(all_.begin() + static_cast<long>(sorted_), all_.begin() + static_cast<long>(m),
                        all_.end(), [](const Candidate& a, const Candidate& b) {
                          return a.prob != b.prob ? a.prob > b.prob : a.id < b.id;
                        });
      sorted_ = m;
    }
    return {all_.data(), m};
  }

 private:
  std::vector<Candidate> all_;
  std::size_t sorted_ = 0;
};

std::size_t rep_slot(TokenId id, std::uint32_t salt) {
  return ((static_cast<std::uint64_t>(id) + salt) * 2654435761ULL >> 7) % kRepDim;
}

}  // namespace

std::vector<std::string> segment_aksharas(std::string_view devanagari) {
  const std::u32string cps = unicode::decode(devanagari);
  std::vector<std::string> out;
  const auto role = [&](std::size_t i) { return devanagari_role(cps[i]); };
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t j = i + 1;
    switch (role(i)) {
      case R::Separator:
        while (j < cps.size() && role(j) == R::Separator) ++j;
        break;
      case R::Consonant:
        while (j + 1 < cps.size() && cps[j] == kVirama && role(j + 1) == R::Consonant) j += 2;
        if (j < cps.size() && (role(j) == R::VowelSign || role(j) == R::Virama)) ++j;
        while (j < cps.size() && role(j) == R::CodaMark) ++j;
        break;
      case R::IndependentVowel:
        while (j < cps.size() && role(j) == R::CodaMark) ++j;
        break;
      default:
        break;
    }
    out.push_back(unicode::encode(std::u32string_view(cps).substr(i, j - i)));
    i = j;
  }
  return out;
}

TokenKind classify_token(std::string_view token) {
  if (token == kBos || token == kEos) return TokenKind::Special;
  bool all_sep = true, all_mod = true;
  for (char32_t c : unicode::decode(token)) {
    const auto r = devanagari_role(c);
    all_sep = all_sep && r == R::Separator;
    all_mod = all_mod && (r == R::VowelSign || r == R::Virama || r == R::CodaMark);
  }
  if (token.empty()) return TokenKind::Letter;
  if (all_sep) return TokenKind::Separator;
  if (all_mod) return TokenKind::ModifierOnly;
  return TokenKind::Letter;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  kinds_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate vocab token '" + tokens_[i] + "'");
    }
    kinds_.push_back(classify_token(tokens_[i]));
    max_token_bytes_ = std::max(max_token_bytes_, tokens_[i].size());
  }
  if (tokens_.size() >= (1u << kIdBits)) throw Error(ErrorCode::InvalidArgument, "vocab too large");
  const auto need = [&](std::string_view t) {
    const auto id = find(t);
    if (!id) throw Error(ErrorCode::InvalidArgument, "vocab lacks '" + std::string(t) + "'");
    return *id;
  };
  bos_ = need(kBos);
  eos_ = need(kEos);
  sep_ = need(kSep);
}

Vocab Vocab::build(std::span<const std::string> corpus) {
  std::set<std::string> seen;
  for (char32_t c : devanagari_inventory()) seen.insert(unicode::encode(std::u32string(1, c)));
  for (const char* ws : {"\t", "\n", "\r"}) seen.insert(ws);
  for (const auto& text : corpus) {
    for (auto& a : segment_aksharas(to_devanagari(text))) seen.insert(std::move(a));
  }
  std::vector<std::string> tokens{std::string(kBos), std::string(kEos)};
  tokens.insert(tokens.end(), seen.begin(), seen.end());
  return Vocab(std::move(tokens));
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error(ErrorCode::UnknownId, "unknown token id " + std::to_string(id));
  return tokens_[id];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocab::tokenize(std::string_view text) const {
  const std::string dev = to_devanagari(text);
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < dev.size()) {
    std::size_t len = std::min(max_token_bytes_, dev.size() - pos);
    for (; len > 0; --len) {
      const auto it = index_.find(dev.substr(pos, len));
      if (it != index_.end() && kinds_[it->second] != TokenKind::Special) {
        out.push_back(it->second);
        break;
      }
    }
    if (len == 0) {
      throw Error(ErrorCode::UnsupportedCodepoint,
                  "no vocab token covers byte offset " + std::to_string(pos), pos);
    }
    pos += len;
  }
  return out;
}

std::string Vocab::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (kind(id) == TokenKind::Special) continue;
    out += token(id);
  }
  return out;
}

std::string Vocab::digest() const { return sha256_hex(json(tokens_).dump()); }

NgramModel::NgramModel(Vocab vocab, std::size_t order, double smoothing)
    : vocab_(std::move(vocab)), order_(order), smoothing_(smoothing), levels_(order) {
  if (order_ < 1 || order_ > kMaxOrder) {
    throw Error(ErrorCode::InvalidArgument, "n-gram order must be 1.." + std::to_string(kMaxOrder));
  }
  if (!(smoothing_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing must be positive");
}

std::string NgramModel::key(std::span<const TokenId> ctx) {
  std::string k(ctx.size() * 3, '\0');
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    for (std::size_t b = 0; b < 3; ++b) k[3 * i + b] = static_cast<char>((ctx[i] >> (8 * b)) & 0xFF);
  }
  return k;
}

std::vector<TokenId> NgramModel::unkey(std::string_view k) {
  std::vector<TokenId> ctx(k.size() / 3);
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    for (std::size_t b = 0; b < 3; ++b) {
      ctx[i] |= static_cast<TokenId>(static_cast<unsigned char>(k[3 * i + b])) << (8 * b);
    }
  }
  return ctx;
}

void NgramModel::count_stream(std::span<const TokenId> ids) {
  std::vector<TokenId> padded(order_ - 1, vocab_.bos());
  padded.insert(padded.end(), ids.begin(), ids.end());
  padded.push_back(vocab_.eos());
  for (std::size_t pos = order_ - 1; pos < padded.size(); ++pos) {
    const TokenId w = padded[pos];
    for (std::size_t m = 0; m < order_; ++m) {
      Follow& f = levels_[m][key(std::span(padded).subspan(pos - m, m))];
      ++f.total;
      auto it = std::lower_bound(f.counts.begin(), f.counts.end(), w,
                                 [](const auto& p, TokenId id) { return p.first < id; });
      if (it != f.counts.end() && it->first == w) {
        ++it->second;
      } else {
        f.counts.insert(it, {w, 1});
      }
    }
  }
}

void NgramModel::finish() {
  reps_.assign(vocab_.size(), Representation{});
  if (levels_.size() > 1) {
    for (const auto& [k, follow] : levels_[1]) {
      auto& rep = reps_[unkey(k).at(0)];
      for (const auto& [w, c] : follow.counts) rep[rep_slot(w, 0)] += static_cast<float>(c);
    }
  }
  for (TokenId id = 0; id < reps_.size(); ++id) {
    auto& rep = reps_[id];
    float total = 0;
    for (float v : rep) total += v;
    // one-hot term so tokens without followers still differ
    rep[rep_slot(id, 17)] += std::max(1.0f, 0.5f * total);
    float norm = 0;
    for (float v : rep) norm += v * v;
    norm = std::sqrt(norm);
    for (float& v : rep) v /= norm;
  }
}

NgramModel NgramModel::train(std::span<const std::string> corpus, std::size_t order,
                             double smoothing) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot train on an empty corpus");
  return train(corpus, Vocab::build(corpus), order, smoothing);
}

NgramModel NgramModel::train(std::span<const std::string> corpus, Vocab vocab, std::size_t order,
                             double smoothing) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot train on an empty corpus");
  NgramModel model(std::move(vocab), order, smoothing);
  for (const auto& text : corpus) model.count_stream(model.vocab_.tokenize(text));
  model.finish();
  return model;
}

NextDistribution NgramModel::next(std::span<const TokenId> context) const {
  const std::size_t v = vocab_.size();
  for (TokenId id : context) {
    if (id >= v) throw Error(ErrorCode::UnknownId, "unknown token id " + std::to_string(id));
  }
  std::vector<TokenId> history(order_ - 1, vocab_.bos());
  history.insert(history.end(), context.begin(), context.end());
  const std::span<const TokenId> hist(history);

  NextDistribution d;
  d.probs.assign(v, 1.0 / static_cast<double>(v));
  const double kv = smoothing_ * static_cast<double>(v);
  for (std::size_t m = 0; m < order_; ++m) {
    const auto it = levels_[m].find(key(hist.subspan(hist.size() - m, m)));
    if (it == levels_[m].end() || it->second.total == 0) break;
    const double denom = static_cast<double>(it->second.total) + kv;
    const double keep = kv / denom;
    for (double& p : d.probs) p *= keep;
    for (const auto& [w, c] : it->second.counts) d.probs[w] += static_cast<double>(c) / denom;
  }
  return d;
}

double NgramModel::perplexity(std::span<const std::string> texts) const {
  double bits = 0;
  std::size_t n = 0;
  for (const auto& text : texts) {
    auto ids = vocab_.tokenize(text);
    ids.push_back(vocab_.eos());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto d = next(std::span(ids).first(i));
      bits -= std::log2(d.probs[ids[i]]);
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyCorpus, "perplexity needs at least one text");
  return std::exp2(bits / static_cast<double>(n));
}

std::unique_ptr<StepQuery> NgramModel::query(std::span<const TokenId> context) {
  return std::make_unique<NgramStepQuery>(next(context).probs);
}

std::string NgramModel::to_json() const {
  std::vector<std::pair<std::vector<TokenId>, const Follow*>> rows;
  for (std::size_t m = 0; m < order_; ++m) {
    for (const auto& [k, follow] : levels_[m]) rows.emplace_back(unkey(k), &follow);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.first.size() != b.first.size() ? a.first.size() < b.first.size() : a.first < b.first;
  });
  json counts = json::array();
  for (const auto& [ctx, follow] : rows) {
    json pairs = json::array();
    for (const auto& [w, c] : follow->counts) pairs.push_back({w, c});
    counts.push_back({ctx, std::move(pairs)});
  }
  const json doc = {{"format", "chandas-ngram"}, {"version", 1},       {"order", order_},
                    {"smoothing", smoothing_},   {"vocab", vocab_.tokens()}, {"counts", std::move(counts)}};
  return doc.dump() + "\n";
}

NgramModel NgramModel::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("model file is not JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "chandas-ngram" || doc.at("version") != 1) {
      throw Error(ErrorCode::FormatError, "not a chandas-ngram version 1 model");
    }
    NgramModel model(Vocab(doc.at("vocab").get<std::vector<std::string>>()),
                     doc.at("order").get<std::size_t>(), doc.at("smoothing").get<double>());
    const std::size_t v = model.vocab_.size();
    for (const auto& row : doc.at("counts")) {
      const auto ctx = row.at(0).get<std::vector<TokenId>>();
      if (ctx.size() >= model.order_) throw Error(ErrorCode::FormatError, "context longer than order");
      Follow follow;
      for (const auto& pair : row.at(1)) {
        const auto w = pair.at(0).get<TokenId>();
        const auto c = pair.at(1).get<std::uint32_t>();
        if (w >= v) throw Error(ErrorCode::FormatError, "token id out of range in counts");
        follow.counts.emplace_back(w, c);
        follow.total += c;
      }
      for (TokenId id : ctx) {
        if (id >= v) throw Error(ErrorCode::FormatError, "context id out of range in counts");
      }
      std::sort(follow.counts.begin(), follow.counts.end());
      model.levels_[ctx.size()][model.key(ctx)] = std::move(follow);
    }
    model.finish();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed model file: ") + e.what());
  }
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json();
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace chandas::lm
