// Builds the reference Anustubh corpus: seed verses that scan Full, followed
// by verses composed from the seed vocabulary under the meter's prefix filters.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "chandas/error.hpp"
#include "chandas/meter.hpp"
#include "chandas/script.hpp"
#include "json.hpp"

using namespace chandas;

namespace {

std::vector<std::string> read_seed(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> words_of(const std::string& devanagari) {
  std::string cleaned = devanagari;
  for (const std::string mark : {"॥", "।"}) {
    for (auto pos = cleaned.find(mark); pos != std::string::npos; pos = cleaned.find(mark)) {
      cleaned.replace(pos, mark.size(), " ");
    }
  }
  std::istringstream in(cleaned);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::size_t syllables_of(const std::string& text) { return syllabify(text).size(); }

class Composer {
 public:
  Composer(const MeterSpec& spec, std::vector<std::string> words, std::uint64_t seed)
      : spec_(spec), filters_(compile(spec)), words_(std::move(words)), rng_(seed) {}

  std::optional<std::string> verse() {
    std::string text;
    for (std::size_t pada = 0; pada < spec_.pada_count; ++pada) {
      if (!extend_pada(text, (pada + 1) * spec_.pada_len)) return std::nullopt;
      if (pada + 1 == spec_.pada_count) {
        text += " ॥";
      } else {
        text += pada + 1 == spec_.pada_count / 2 ? " । " : " ";
      }
    }
    if (classify(spec_, text).kind != VerdictKind::Full) return std::nullopt;
    return text;
  }

 private:
  bool extend_pada(std::string& text, std::size_t boundary) {
    const std::string start = text;
    for (int attempt = 0; attempt < 40; ++attempt) {
      text = start;
      bool stuck = false;
      while (!stuck) {
        const std::size_t have = syllables_of(text);
        if (have == boundary) return true;
        stuck = true;
        for (int pick = 0; pick < 60; ++pick) {
          const auto& w = words_[std::uniform_int_distribution<std::size_t>(0, words_.size() - 1)(rng_)];
          const std::string joined =
              text.empty() || text.back() == ' ' ? text + w : text + " " + w;
          const auto s = syllabify(joined);
          if (s.size() > boundary) continue;
          if (!prefix_ok(*filters_, weigh(s, WeighMode::Streaming))) continue;
          text = joined;
          stuck = false;
          break;
        }
      }
    }
    text = start;
    return false;
  }

  MeterSpec spec_;
  std::shared_ptr<const FilterSet> filters_;
  std::vector<std::string> words_;
  std::mt19937_64 rng_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compose the reference Anustubh corpus"};
  std::string seed_path, out_path;
  std::size_t synthetic = 300;
  std::uint64_t seed = 1;
  app.add_option("--seed-verses", seed_path, "IAST seed verses, one per line")->required();
  app.add_option("--out", out_path, "output JSONL")->required();
  app.add_option("--synthetic", synthetic, "number of composed verses");
  app.add_option("--seed", seed, "composer seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto spec = anustubh();
    std::vector<std::string> kept;
    std::set<std::string> vocabulary;
    std::size_t skipped = 0;
    for (const auto& line : read_seed(seed_path)) {
      const auto deva = transliterate(line, Script::Iast, Script::Devanagari);
      if (classify(spec, deva).kind != VerdictKind::Full) {
        ++skipped;
        continue;
      }
      kept.push_back(deva);
      for (auto& w : words_of(deva)) vocabulary.insert(std::move(w));
    }

    Composer composer(spec, {vocabulary.begin(), vocabulary.end()}, seed);
    std::set<std::string> seen(kept.begin(), kept.end());
    std::vector<std::string> composed;
    while (composed.size() < synthetic) {
      if (auto v = composer.verse(); v && seen.insert(*v).second) composed.push_back(*v);
    }

    std::filesystem::create_directories(std::filesystem::path(out_path).parent_path());
    std::ofstream out(out_path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
    auto emit = [&](const std::string& prefix, std::size_t i, const std::string& text) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%04zu", prefix.c_str(), i + 1);
      out << nlohmann::json{{"id", id}, {"english", ""}, {"sanskrit", text}}.dump() << '\n';
    };
    for (std::size_t i = 0; i < kept.size(); ++i) emit("seed", i, kept[i]);
    for (std::size_t i = 0; i < composed.size(); ++i) emit("comp", i, composed[i]);
    std::cerr << kept.size() << " seed verses kept, " << skipped << " skipped, "
              << composed.size() << " composed, " << vocabulary.size() << " words\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
