#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chandas/script.hpp"

namespace chandas {

enum class Weight : std::uint8_t { Laghu, Guru };

inline char to_char(Weight w) { return w == Weight::Laghu ? 'l' : 'g'; }

struct WeightString {
  std::vector<Weight> weights;
  // False while the final syllable could still change weight as text arrives.
  bool last_determinate = true;

  std::size_t size() const { return weights.size(); }
  bool empty() const { return weights.empty(); }

  // Lowercase 'l'/'g' per syllable, no markers for determinacy.
  std::string str() const;

  friend bool operator==(const WeightString&, const WeightString&) = default;
};

// Parses a string over {l, g}; every position is determinate.
WeightString weights_from_string(std::string_view lg);

enum class WeighMode { Final, Streaming };

WeightString weigh(const Syllabification& s, WeighMode mode);

enum class GanaName : std::uint8_t { ya, ra, ta, bha, ja, sa, ma, na };

struct Gana {
  GanaName name;
  std::array<Weight, 3> pattern;
};

std::string_view to_string(GanaName name);

// The eight trisyllabic feet, in the traditional ya..na order.
std::span<const Gana> gana_table();

// Raises Error(WrongArity) unless exactly three weights are given.
Gana gana_of(std::span<const Weight> triple);

// Splits a weight string into consecutive triples; a trailing remainder of one
// or two syllables is returned as the second member as 'l'/'g' text.
std::pair<std::vector<Gana>, std::string> gana_split(std::span<const Weight> weights);

}  // namespace chandas
