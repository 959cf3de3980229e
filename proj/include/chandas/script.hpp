#pragma once

// Script frontends (Devanagari, IAST) over a canonical phoneme inventory, and
// syllabification of phoneme sequences.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chandas {

enum class Script { Devanagari, Iast };

std::string_view to_string(Script script);
std::optional<Script> script_from_string(std::string_view name);

// Devanagari if any codepoint falls in the Devanagari block, IAST otherwise.
Script detect_script(std::string_view text);

enum class PhonemeClass : std::uint8_t { Consonant, ShortVowel, LongVowel, Anusvara, Visarga };

// clang-format off
enum class Phoneme : std::uint8_t {
  a, aa, i, ii, u, uu, r_vocalic, rr_vocalic, l_vocalic, e, ai, o, au,
  k, kh, g, gh, ng, c, ch, j, jh, ny, tt, tth, dd, ddh, nn, t, th, d, dh, n,
  p, ph, b, bh, m, y, r, l, v, sh, ss, s, h,
  anusvara, visarga,
};
// clang-format on

inline constexpr std::size_t kPhonemeCount = static_cast<std::size_t>(Phoneme::visarga) + 1;

PhonemeClass class_of(Phoneme p);
std::string_view iast_of(Phoneme p);

inline bool is_vowel(Phoneme p) {
  const auto c = class_of(p);
  return c == PhonemeClass::ShortVowel || c == PhonemeClass::LongVowel;
}
inline bool is_consonant(Phoneme p) { return class_of(p) == PhonemeClass::Consonant; }
inline bool is_coda_mark(Phoneme p) {
  const auto c = class_of(p);
  return c == PhonemeClass::Anusvara || c == PhonemeClass::Visarga;
}

// Non-phonemic characters kept in the stream so text round-trips. They never
// take part in scansion: consonant clusters run across them.
enum class SeparatorKind : std::uint8_t { Space, Danda, DoubleDanda, Avagraha, Digit };

struct Separator {
  SeparatorKind kind;
  char32_t value = 0;  // the whitespace codepoint for Space, 0..9 for Digit

  friend bool operator==(const Separator&, const Separator&) = default;
};

struct SeparatorMark {
  std::size_t position;  // number of phonemes preceding the separator
  Separator separator;

  friend bool operator==(const SeparatorMark&, const SeparatorMark&) = default;
};

struct PhonemeSequence {
  std::vector<Phoneme> phonemes;
  std::vector<SeparatorMark> separators;
  Script provenance = Script::Iast;
};

enum class Normalize { Yes, AssumeNfc };

// Raises Error(UnsupportedCodepoint) for characters outside the inventory and
// Error(MalformedCluster) for ill-formed sign sequences; both carry the
// codepoint offset into the normalized text.
PhonemeSequence parse(std::string_view text, Script script, Normalize normalize = Normalize::Yes);
PhonemeSequence parse(std::string_view text);

std::string render(const PhonemeSequence& seq, Script script);

std::string transliterate(std::string_view text, Script from, Script to);

// Role of a single codepoint in Devanagari text accepted by parse().
enum class DevanagariRole : std::uint8_t {
  None, Consonant, IndependentVowel, VowelSign, Virama, CodaMark, Separator
};
DevanagariRole devanagari_role(char32_t c);

// Every codepoint parse() accepts in Devanagari text except whitespace other
// than U+0020, in ascending order.
std::vector<char32_t> devanagari_inventory();

struct Syllable {
  std::vector<Phoneme> onset;
  Phoneme nucleus = Phoneme::a;
  std::vector<Phoneme> coda_marks;
  std::size_t following_cluster_size = 0;

  bool long_nucleus() const { return class_of(nucleus) == PhonemeClass::LongVowel; }
  std::string iast() const;
};

struct Syllabification {
  std::vector<Syllable> syllables;
  std::vector<Phoneme> pending;

  std::size_t size() const { return syllables.size(); }
};

Syllabification syllabify(const PhonemeSequence& seq);
Syllabification syllabify(std::string_view text);

// Concatenation of every syllable's phonemes followed by `pending`.
std::vector<Phoneme> flatten(const Syllabification& s);

}  // namespace chandas
