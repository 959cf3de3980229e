#pragma once

// Mask service: an external decoding loop owns the language model and asks
// which candidate token strings may follow the text accepted so far.
//
//   {"type":"hello","meter":M,"passthrough":[..],"eos":[..]}
//                                   -> {"type":"ok","meter":name,"max_syllables":N}
//   {"type":"mask","candidates":[token,...]}
//                                   -> {"type":"survivors","indices":[i,...]}
//   {"type":"accept","token":T}     -> {"type":"state","text":..,"syllables":n,"complete":b}
//   {"type":"reset"}                -> {"type":"state",...}
//   {"type":"bye"}
//
// Failures are answered with {"type":"error","message":...} and leave the
// session usable.

#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "chandas/decode.hpp"
#include "chandas/net.hpp"

namespace chandas::mask {

// Passthrough tokens (forced language tags and the like) always survive and
// add nothing to the text. EOS tokens survive only once the verse is complete.
class MaskSession {
 public:
  MaskSession(const MeterSpec& spec, std::vector<std::string> passthrough = {},
              std::vector<std::string> eos = {},
              std::shared_ptr<decode::ScanCache> cache = nullptr);

  std::vector<std::size_t> survivors(std::span<const std::string> candidates) const;
  // Raises Error(InvalidArgument) for a token the mask would reject.
  void accept(const std::string& token);
  void reset() { state_.reset(); }

  const decode::MeterState& state() const { return state_; }

 private:
  bool admits(const std::string& token) const;

  decode::MeterState state_;
  std::set<std::string> passthrough_;
  std::set<std::string> eos_;
};

using MeterResolver = std::function<MeterSpec(const std::string&)>;

// Answers frames on `channel` until bye or end of input. Sessions opened on
// different channels may share `cache`. `resolve` receives the hello's meter
// name, empty when none was sent; by default that means Anustubh.
void serve(net::LineChannel& channel, std::shared_ptr<decode::ScanCache> cache,
           const MeterResolver& resolve = {});

// One recorded decode session: every step's candidate strings, the indices
// that survived and the accepted token.
struct SessionRecord {
  std::string meter;
  std::vector<decode::StepRecord> steps;
};

std::string to_json_line(const SessionRecord& record);
SessionRecord session_from_json(std::string_view line);
// Raises Error(FormatError) with the line number of a malformed row.
std::vector<SessionRecord> read_sessions(const std::filesystem::path& path);

}  // namespace chandas::mask
