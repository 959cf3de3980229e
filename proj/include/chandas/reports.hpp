#pragma once

// JSON renderings of library results, shared by the command line and tests.

#include <optional>
#include <string>

#include "chandas/decode.hpp"
#include "chandas/meter.hpp"

namespace chandas::reports {

// {"script","syllables":[iast...],"pending","count"}
std::string syllabify_json(std::string_view text, Script script);

// {"script","syllables":[iast...],"weights","count","ganas","remainder"} plus
// a "verdict" block when a meter is given.
std::string scan_json(std::string_view text, Script script, const MeterSpec* meter = nullptr);

// {"text_devanagari","text_iast","weights","verdict","syllables","stats":{...}}.
// Latency and throughput appear only with `with_timing`, so that fixed seeds
// give byte-identical output.
std::string generation_json(const decode::Generation& g, bool with_timing, bool pretty = false);

std::string bench_json(const decode::BenchReport& r, const decode::DecodeConfig& config,
                       bool with_timing);

std::string model_json(const lm::NgramModel& model);

}  // namespace chandas::reports
