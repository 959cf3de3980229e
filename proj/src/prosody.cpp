#include "chandas/prosody.hpp"

#include "chandas/error.hpp"

namespace chandas {
namespace {

using W = Weight;

constexpr std::array<Gana, 8> kGanas{{
    {GanaName::ya, {W::Laghu, W::Guru, W::Guru}},
    {GanaName::ra, {W::Guru, W::Laghu, W::Guru}},
    {GanaName::ta, {W::Guru, W::Guru, W::Laghu}},
    {GanaName::bha, {W::Guru, W::Laghu, W::Laghu}},
    {GanaName::ja, {W::Laghu, W::Guru, W::Laghu}},
    {GanaName::sa, {W::Laghu, W::Laghu, W::Guru}},
    {GanaName::ma, {W::Guru, W::Guru, W::Guru}},
    {GanaName::na, {W::Laghu, W::Laghu, W::Laghu}},
}};

}  // namespace

std::string WeightString::str() const {
  std::string out;
  out.reserve(weights.size());
  for (Weight w : weights) out.push_back(to_char(w));
  return out;
}

WeightString weights_from_string(std::string_view lg) {
  WeightString out;
  out.weights.reserve(lg.size());
  for (std::size_t i = 0; i < lg.size(); ++i) {
    if (lg[i] == 'l') {
      out.weights.push_back(Weight::Laghu);
    } else if (lg[i] == 'g') {
      out.weights.push_back(Weight::Guru);
    } else {
      throw Error(ErrorCode::InvalidArgument, "weight strings use only 'l' and 'g'", i);
    }
  }
  return out;
}

WeightString weigh(const Syllabification& s, WeighMode mode) {
  WeightString out;
  const auto& syls = s.syllables;
  out.weights.reserve(syls.size());
  for (std::size_t i = 0; i < syls.size(); ++i) {
    const Syllable& syl = syls[i];
    const bool last = i + 1 == syls.size();
    const bool heavy = syl.long_nucleus() || !syl.coda_marks.empty() ||
                       syl.following_cluster_size >= 2 ||
                       (mode == WeighMode::Final && last && syl.following_cluster_size >= 1);
    out.weights.push_back(heavy ? Weight::Guru : Weight::Laghu);
  }
  if (mode == WeighMode::Streaming && !syls.empty()) {
    const Syllable& tail = syls.back();
    out.last_determinate =
        tail.long_nucleus() || !tail.coda_marks.empty() || tail.following_cluster_size >= 2;
  }
  return out;
}

std::string_view to_string(GanaName name) {
  switch (name) {
    case GanaName::ya: return "ya";
    case GanaName::ra: return "ra";
    case GanaName::ta: return "ta";
    case GanaName::bha: return "bha";
    case GanaName::ja: return "ja";
    case GanaName::sa: return "sa";
    case GanaName::ma: return "ma";
    case GanaName::na: return "na";
  }
  return "?";
}

std::span<const Gana> gana_table() { return kGanas; }

Gana gana_of(std::span<const Weight> triple) {
  if (triple.size() != 3) {
    throw Error(ErrorCode::WrongArity,
                "a gana is exactly three syllables, got " + std::to_string(triple.size()));
  }
  for (const Gana& g : kGanas) {
    if (g.pattern[0] == triple[0] && g.pattern[1] == triple[1] && g.pattern[2] == triple[2]) {
      return g;
    }
  }
  // Unreachable: the table covers all eight binary triples.
  throw Error(ErrorCode::InvalidArgument, "no gana for triple");
}

std::pair<std::vector<Gana>, std::string> gana_split(std::span<const Weight> weights) {
  std::vector<Gana> ganas;
  std::size_t i = 0;
  for (; i + 3 <= weights.size(); i += 3) ganas.push_back(gana_of(weights.subspan(i, 3)));
  std::string rest;
  for (; i < weights.size(); ++i) rest.push_back(to_char(weights[i]));
  return {std::move(ganas), std::move(rest)};
}

}  // namespace chandas
