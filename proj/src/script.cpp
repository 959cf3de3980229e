#include "chandas/script.hpp"

#include <array>
#include <cstdio>
#include <string>

#include "chandas/error.hpp"
#include "chandas/unicode.hpp"

namespace chandas {
namespace {

struct PhonemeInfo {
  std::u32string_view iast;
  char32_t devanagari;  // independent vowel, consonant base, or sign
  char32_t matra;       // dependent vowel sign; 0 for 'a' and non-vowels
  PhonemeClass cls;
};

using PC = PhonemeClass;

// Indexed by Phoneme.
constexpr std::array<PhonemeInfo, kPhonemeCount> kInfo{{
    {U"a", U'अ', 0, PC::ShortVowel},
    {U"ā", U'आ', U'ा', PC::LongVowel},
    {U"i", U'इ', U'ि', PC::ShortVowel},
    {U"ī", U'ई', U'ी', PC::LongVowel},
    {U"u", U'उ', U'ु', PC::ShortVowel},
    {U"ū", U'ऊ', U'ू', PC::LongVowel},
    {U"ṛ", U'ऋ', U'ृ', PC::ShortVowel},
    {U"ṝ", U'ॠ', U'ॄ', PC::LongVowel},
    {U"ḷ", U'ऌ', U'ॢ', PC::ShortVowel},
    {U"e", U'ए', U'े', PC::LongVowel},
    {U"ai", U'ऐ', U'ै', PC::LongVowel},
    {U"o", U'ओ', U'ो', PC::LongVowel},
    {U"au", U'औ', U'ौ', PC::LongVowel},
    {U"k", U'क', 0, PC::Consonant},
    {U"kh", U'ख', 0, PC::Consonant},
    {U"g", U'ग', 0, PC::Consonant},
    {U"gh", U'घ', 0, PC::Consonant},
    {U"ṅ", U'ङ', 0, PC::Consonant},
    {U"c", U'च', 0, PC::Consonant},
    {U"ch", U'छ', 0, PC::Consonant},
    {U"j", U'ज', 0, PC::Consonant},
    {U"jh", U'झ', 0, PC::Consonant},
    {U"ñ", U'ञ', 0, PC::Consonant},
    {U"ṭ", U'ट', 0, PC::Consonant},
    {U"ṭh", U'ठ', 0, PC::Consonant},
    {U"ḍ", U'ड', 0, PC::Consonant},
    {U"ḍh", U'ढ', 0, PC::Consonant},
    {U"ṇ", U'ण', 0, PC::Consonant},
    {U"t", U'त', 0, PC::Consonant},
    {U"th", U'थ', 0, PC::Consonant},
    {U"d", U'द', 0, PC::Consonant},
    {U"dh", U'ध', 0, PC::Consonant},
    {U"n", U'न', 0, PC::Consonant},
    {U"p", U'प', 0, PC::Consonant},
    {U"ph", U'फ', 0, PC::Consonant},
    {U"b", U'ब', 0, PC::Consonant},
    {U"bh", U'भ', 0, PC::Consonant},
    {U"m", U'म', 0, PC::Consonant},
    {U"y", U'य', 0, PC::Consonant},
    {U"r", U'र', 0, PC::Consonant},
    {U"l", U'ल', 0, PC::Consonant},
    {U"v", U'व', 0, PC::Consonant},
    {U"ś", U'श', 0, PC::Consonant},
    {U"ṣ", U'ष', 0, PC::Consonant},
    {U"s", U'स', 0, PC::Consonant},
    {U"h", U'ह', 0, PC::Consonant},
    {U"ṃ", U'ं', 0, PC::Anusvara},
    {U"ḥ", U'ः', 0, PC::Visarga},
}};

constexpr char32_t kVirama = U'्';
constexpr char32_t kCandrabindu = U'ँ';
constexpr char32_t kAvagraha = U'ऽ';
constexpr char32_t kDanda = U'।';
constexpr char32_t kDoubleDanda = U'॥';
constexpr char32_t kDevanagariZero = U'०';
constexpr char32_t kIastAnusvaraAlt = U'ṁ';  // ṁ
constexpr char32_t kHiatusMark = U'·';       // separates IAST a·i, k·h

const PhonemeInfo& info(Phoneme p) { return kInfo[static_cast<std::size_t>(p)]; }

Phoneme phoneme_at(std::size_t index) { return static_cast<Phoneme>(index); }

bool is_whitespace(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; }

std::optional<Separator> common_separator(char32_t c) {
  if (is_whitespace(c)) return Separator{SeparatorKind::Space, c};
  if (c == kDanda) return Separator{SeparatorKind::Danda, 0};
  if (c == kDoubleDanda) return Separator{SeparatorKind::DoubleDanda, 0};
  return std::nullopt;
}

// Devanagari lookup tables, built once.
struct DevanagariTables {
  std::array<int, 0x80> by_offset{};  // codepoint - 0x0900 -> encoded role
  // role encoding: 0 = none, 1xx = independent vowel, 2xx = matra, 3xx = consonant
  DevanagariTables() {
    by_offset.fill(0);
    for (std::size_t idx = 0; idx < kPhonemeCount; ++idx) {
      const auto& pi = kInfo[idx];
      const int id = static_cast<int>(idx);
      if (pi.cls == PC::Consonant) {
        by_offset[pi.devanagari - 0x0900] = 300 + id;
      } else if (pi.cls == PC::ShortVowel || pi.cls == PC::LongVowel) {
        by_offset[pi.devanagari - 0x0900] = 100 + id;
        if (pi.matra != 0) by_offset[pi.matra - 0x0900] = 200 + id;
      }
    }
  }
};

const DevanagariTables& dev_tables() {
  static const DevanagariTables tables;
  return tables;
}

class SequenceBuilder {
 public:
  explicit SequenceBuilder(Script script) { seq_.provenance = script; }

  void push(Phoneme p) { seq_.phonemes.push_back(p); }
  void separator(Separator s) { seq_.separators.push_back({seq_.phonemes.size(), s}); }
  bool last_is_vowel() const {
    return !seq_.phonemes.empty() && is_vowel(seq_.phonemes.back()) && !separator_after_last();
  }
  PhonemeSequence take() { return std::move(seq_); }

 private:
  bool separator_after_last() const {
    return !seq_.separators.empty() && seq_.separators.back().position == seq_.phonemes.size();
  }
  PhonemeSequence seq_;
};

[[noreturn]] void unsupported(char32_t c, std::size_t offset) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "unsupported codepoint U+%04X at offset %zu",
                static_cast<unsigned>(c), offset);
  throw Error(ErrorCode::UnsupportedCodepoint, buf, offset);
}

[[noreturn]] void malformed(std::string_view what, std::size_t offset) {
  throw Error(ErrorCode::MalformedCluster,
              std::string(what) + " at offset " + std::to_string(offset), offset);
}

PhonemeSequence parse_devanagari(std::u32string_view text) {
  enum class Last { None, Consonant, VowelSign, Virama, Vowel, Mark, Separator };
  const auto& tables = dev_tables();
  SequenceBuilder out(Script::Devanagari);
  Last last = Last::None;

  const auto close_inherent = [&] {
    if (last == Last::Consonant) out.push(Phoneme::a);
  };

  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    const char32_t c = text[pos];
    if (auto sep = common_separator(c)) {
      close_inherent();
      out.separator(*sep);
      last = Last::Separator;
      continue;
    }
    if (c == kAvagraha || (c >= kDevanagariZero && c <= kDevanagariZero + 9)) {
      close_inherent();
      out.separator(c == kAvagraha
                        ? Separator{SeparatorKind::Avagraha, 0}
                        : Separator{SeparatorKind::Digit, static_cast<char32_t>(c - kDevanagariZero)});
      last = Last::Separator;
      continue;
    }
    if (c < 0x0900 || c >= 0x0980) unsupported(c, pos);

    if (c == kVirama) {
      if (last != Last::Consonant) malformed("stray virama", pos);
      last = Last::Virama;
      continue;
    }
    if (c == info(Phoneme::anusvara).devanagari || c == kCandrabindu ||
        c == info(Phoneme::visarga).devanagari) {
      if (last == Last::Consonant) {
        out.push(Phoneme::a);
      } else if (last != Last::VowelSign && last != Last::Vowel) {
        malformed("anusvara/visarga without a preceding vowel", pos);
      }
      out.push(c == info(Phoneme::visarga).devanagari ? Phoneme::visarga : Phoneme::anusvara);
      last = Last::Mark;
      continue;
    }

    const int role = tables.by_offset[c - 0x0900];
    if (role >= 300) {
      close_inherent();
      out.push(phoneme_at(static_cast<std::size_t>(role - 300)));
      last = Last::Consonant;
    } else if (role >= 200) {
      if (last == Last::VowelSign) malformed("two dependent vowel signs in a row", pos);
      if (last != Last::Consonant) malformed("vowel sign without a base consonant", pos);
      out.push(phoneme_at(static_cast<std::size_t>(role - 200)));
      last = Last::VowelSign;
    } else if (role >= 100) {
      close_inherent();
      out.push(phoneme_at(static_cast<std::size_t>(role - 100)));
      last = Last::Vowel;
    } else {
      unsupported(c, pos);
    }
  }
  close_inherent();
  return out.take();
}

// Longest-match IAST units. Multi-codepoint units are the aspirates and ai/au.
std::optional<std::pair<Phoneme, std::size_t>> match_iast(std::u32string_view text,
                                                          std::size_t pos) {
  std::optional<std::pair<Phoneme, std::size_t>> best;
  for (std::size_t idx = 0; idx < kPhonemeCount; ++idx) {
    const auto unit = kInfo[idx].iast;
    if (unit.size() > text.size() - pos) continue;
    if (text.substr(pos, unit.size()) != unit) continue;
    if (!best || unit.size() > best->second) best = std::make_pair(phoneme_at(idx), unit.size());
  }
  if (!best && text[pos] == kIastAnusvaraAlt) best = std::make_pair(Phoneme::anusvara, 1);
  return best;
}

PhonemeSequence parse_iast(std::u32string_view text) {
  SequenceBuilder out(Script::Iast);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t c = text[pos];
    if (auto sep = common_separator(c)) {
      out.separator(*sep);
      ++pos;
      continue;
    }
    if (c == U'|') {
      const bool dbl = pos + 1 < text.size() && text[pos + 1] == U'|';
      out.separator({dbl ? SeparatorKind::DoubleDanda : SeparatorKind::Danda, 0});
      pos += dbl ? 2 : 1;
      continue;
    }
    if (c == U'\'' || c == U'’' || c == kAvagraha) {
      out.separator({SeparatorKind::Avagraha, 0});
      ++pos;
      continue;
    }
    if (c >= U'0' && c <= U'9') {
      out.separator({SeparatorKind::Digit, static_cast<char32_t>(c - U'0')});
      ++pos;
      continue;
    }
    if (c == kHiatusMark) {
      ++pos;
      continue;
    }
    const auto m = match_iast(text, pos);
    if (!m) unsupported(c, pos);
    if (is_coda_mark(m->first) && !out.last_is_vowel()) {
      malformed("anusvara/visarga without a preceding vowel", pos);
    }
    out.push(m->first);
    pos += m->second;
  }
  return out.take();
}

bool needs_hiatus_mark(Phoneme prev, Phoneme next) {
  if (prev == Phoneme::a) return next == Phoneme::i || next == Phoneme::u;
  if (next != Phoneme::h) return false;
  switch (prev) {
    case Phoneme::k: case Phoneme::g: case Phoneme::c: case Phoneme::j:
    case Phoneme::tt: case Phoneme::dd: case Phoneme::t: case Phoneme::d:
    case Phoneme::p: case Phoneme::b:
      return true;
    default:
      return false;
  }
}

// ASCII bars would merge with a preceding one, so fall back to the real marks.
bool ends_with_bar(const std::string& out) { return !out.empty() && out.back() == '|'; }

void render_separator(std::string& out, const Separator& s, Script script) {
  switch (s.kind) {
    case SeparatorKind::Space:
      unicode::append(out, s.value);
      break;
    case SeparatorKind::Danda:
      if (script == Script::Devanagari || ends_with_bar(out)) unicode::append(out, kDanda); else out += '|';
      break;
    case SeparatorKind::DoubleDanda:
      if (script == Script::Devanagari || ends_with_bar(out)) {
        unicode::append(out, kDoubleDanda);
      } else {
        out += "||";
      }
      break;
    case SeparatorKind::Avagraha:
      if (script == Script::Devanagari) unicode::append(out, kAvagraha); else out += '\'';
      break;
    case SeparatorKind::Digit:
      unicode::append(out, (script == Script::Devanagari ? kDevanagariZero : U'0') + s.value);
      break;
  }
}

}  // namespace

std::string_view to_string(Script script) {
  return script == Script::Devanagari ? "devanagari" : "iast";
}

std::optional<Script> script_from_string(std::string_view name) {
  if (name == "devanagari" || name == "deva") return Script::Devanagari;
  if (name == "iast") return Script::Iast;
  return std::nullopt;
}

Script detect_script(std::string_view text) {
  for (char32_t c : unicode::decode(text)) {
    if (c >= 0x0900 && c < 0x0980) return Script::Devanagari;
  }
  return Script::Iast;
}

PhonemeClass class_of(Phoneme p) { return info(p).cls; }

std::string_view iast_of(Phoneme p) {
  // The table stores UTF-32; keep a parallel UTF-8 cache for display.
  static const auto cache = [] {
    std::array<std::string, kPhonemeCount> out;
    for (std::size_t idx = 0; idx < kPhonemeCount; ++idx) out[idx] = unicode::encode(kInfo[idx].iast);
    return out;
  }();
  return cache[static_cast<std::size_t>(p)];
}

PhonemeSequence parse(std::string_view text, Script script, Normalize normalize) {
  const std::string normalized =
      normalize == Normalize::Yes ? unicode::nfc(text) : std::string(text);
  const std::u32string cps = unicode::decode(normalized);
  return script == Script::Devanagari ? parse_devanagari(cps) : parse_iast(cps);
}

PhonemeSequence parse(std::string_view text) { return parse(text, detect_script(text)); }

std::string render(const PhonemeSequence& seq, Script script) {
  std::string out;
  const auto& ph = seq.phonemes;
  std::size_t next_sep = 0;
  const auto flush_separators = [&](std::size_t position) {
    bool any = false;
    while (next_sep < seq.separators.size() && seq.separators[next_sep].position == position) {
      render_separator(out, seq.separators[next_sep].separator, script);
      ++next_sep;
      any = true;
    }
    return any;
  };

  for (std::size_t idx = 0; idx < ph.size(); ++idx) {
    const bool separated = flush_separators(idx);
    const Phoneme p = ph[idx];
    if (script == Script::Iast) {
      if (idx > 0 && !separated && needs_hiatus_mark(ph[idx - 1], p)) unicode::append(out, kHiatusMark);
      out += iast_of(p);
      continue;
    }
    if (is_consonant(p)) {
      unicode::append(out, info(p).devanagari);
      const bool vowel_follows = idx + 1 < ph.size() && is_vowel(ph[idx + 1]) &&
                                 !(next_sep < seq.separators.size() &&
                                   seq.separators[next_sep].position == idx + 1);
      if (vowel_follows) {
        ++idx;
        if (info(ph[idx]).matra != 0) unicode::append(out, info(ph[idx]).matra);
      } else {
        unicode::append(out, kVirama);
      }
    } else {
      unicode::append(out, info(p).devanagari);
    }
  }
  flush_separators(ph.size());
  return out;
}

std::string transliterate(std::string_view text, Script from, Script to) {
  const PhonemeSequence seq = parse(text, from);
  if (from == to) return unicode::nfc(text);
  return render(seq, to);
}

DevanagariRole devanagari_role(char32_t c) {
  using R = DevanagariRole;
  if (common_separator(c) || c == kAvagraha || (c >= kDevanagariZero && c <= kDevanagariZero + 9)) {
    return R::Separator;
  }
  if (c == kVirama) return R::Virama;
  if (c == info(Phoneme::anusvara).devanagari || c == kCandrabindu ||
      c == info(Phoneme::visarga).devanagari) {
    return R::CodaMark;
  }
  if (c < 0x0900 || c >= 0x0980) return R::None;
  const int role = dev_tables().by_offset[c - 0x0900];
  if (role >= 300) return R::Consonant;
  if (role >= 200) return R::VowelSign;
  if (role >= 100) return R::IndependentVowel;
  return R::None;
}

std::vector<char32_t> devanagari_inventory() {
  std::vector<char32_t> out{U' '};
  for (char32_t c = 0x0900; c < 0x0980; ++c) {
    if (devanagari_role(c) != DevanagariRole::None) out.push_back(c);
  }
  return out;
}

std::string Syllable::iast() const {
  std::string out;
  for (Phoneme p : onset) out += iast_of(p);
  out += iast_of(nucleus);
  for (Phoneme p : coda_marks) out += iast_of(p);
  return out;
}

Syllabification syllabify(const PhonemeSequence& seq) {
  Syllabification out;
  std::vector<Phoneme> cluster;
  for (Phoneme p : seq.phonemes) {
    if (is_consonant(p)) {
      cluster.push_back(p);
    } else if (is_vowel(p)) {
      if (!out.syllables.empty()) out.syllables.back().following_cluster_size = cluster.size();
      Syllable syl;
      syl.onset = std::move(cluster);
      cluster.clear();
      syl.nucleus = p;
      out.syllables.push_back(std::move(syl));
    } else {
      // Coda marks attach to the open syllable; parse() guarantees one exists
      // and that no consonant intervenes.
      if (out.syllables.empty() || !cluster.empty()) {
        throw Error(ErrorCode::MalformedCluster, "coda mark without a preceding vowel");
      }
      out.syllables.back().coda_marks.push_back(p);
    }
  }
  if (!out.syllables.empty()) out.syllables.back().following_cluster_size = cluster.size();
  out.pending = std::move(cluster);
  return out;
}

Syllabification syllabify(std::string_view text) { return syllabify(parse(text)); }

std::vector<Phoneme> flatten(const Syllabification& s) {
  std::vector<Phoneme> out;
  for (const auto& syl : s.syllables) {
    out.insert(out.end(), syl.onset.begin(), syl.onset.end());
    out.push_back(syl.nucleus);
    out.insert(out.end(), syl.coda_marks.begin(), syl.coda_marks.end());
  }
  out.insert(out.end(), s.pending.begin(), s.pending.end());
  return out;
}

}  // namespace chandas
