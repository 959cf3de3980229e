#include "chandas/mask_service.hpp"

#include <fstream>
#include <optional>

#include "chandas/error.hpp"
#include "json.hpp"

namespace chandas::mask {
namespace {

using json = nlohmann::json;

std::string error_frame(std::string_view message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

std::string state_frame(const decode::MeterState& s) {
  return json{{"type", "state"},
              {"text", s.text()},
              {"syllables", s.syllables()},
              {"complete", s.complete()}}
      .dump();
}

}  // namespace

MaskSession::MaskSession(const MeterSpec& spec, std::vector<std::string> passthrough,
                         std::vector<std::string> eos, std::shared_ptr<decode::ScanCache> cache)
    : state_(spec, std::move(cache)),
      passthrough_(passthrough.begin(), passthrough.end()),
      eos_(eos.begin(), eos.end()) {}

bool MaskSession::admits(const std::string& token) const {
  if (passthrough_.count(token)) return true;
  if (eos_.count(token)) return state_.complete();
  return state_.check(token) == decode::MaskReason::Admitted;
}

std::vector<std::size_t> MaskSession::survivors(std::span<const std::string> candidates) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (admits(candidates[i])) out.push_back(i);
  }
  return out;
}

void MaskSession::accept(const std::string& token) {
  if (passthrough_.count(token)) return;
  if (eos_.count(token)) {
    if (!state_.complete()) throw Error(ErrorCode::InvalidArgument, "end of sequence before the verse is complete");
    return;
  }
  state_.accept(token);
}

void serve(net::LineChannel& channel, std::shared_ptr<decode::ScanCache> cache,
           const MeterResolver& resolve) {
  std::optional<MaskSession> session;
  while (auto line = channel.receive(std::chrono::hours(24 * 365))) {
    if (line->empty()) continue;
    json frame;
    try {
      frame = json::parse(*line);
    } catch (const json::exception&) {
      channel.send(error_frame("malformed frame"));
      continue;
    }
    const std::string type = frame.is_object() ? frame.value("type", "") : "";
    try {
      if (type == "bye") return;
      if (type == "hello") {
        const std::string name = frame.value("meter", "");
        const MeterSpec spec = resolve ? resolve(name) : resolve_meter(name.empty() ? "anustubh" : name);
        session.emplace(spec, frame.value("passthrough", std::vector<std::string>{}),
                        frame.value("eos", std::vector<std::string>{}), cache);
        channel.send(json{{"type", "ok"}, {"meter", spec.name}, {"max_syllables", spec.total()}}.dump());
        continue;
      }
      if (type != "mask" && type != "accept" && type != "reset") {
        channel.send(error_frame("unknown frame type '" + type + "'"));
        continue;
      }
      if (!session) {
        channel.send(error_frame("hello required before " + type));
        continue;
      }
      if (type == "mask") {
        const auto cands = frame.at("candidates").get<std::vector<std::string>>();
        channel.send(json{{"type", "survivors"}, {"indices", session->survivors(cands)}}.dump());
      } else if (type == "accept") {
        session->accept(frame.at("token").get<std::string>());
        channel.send(state_frame(session->state()));
      } else {
        session->reset();
        channel.send(state_frame(session->state()));
      }
    } catch (const json::exception& e) {
      channel.send(error_frame(std::string("bad frame: ") + e.what()));
    } catch (const Error& e) {
      channel.send(error_frame(e.what()));
    }
  }
}

std::string to_json_line(const SessionRecord& record) {
  json steps = json::array();
  for (const auto& s : record.steps) {
    steps.push_back({{"candidates", s.candidates}, {"survivors", s.survivors}, {"accepted", s.accepted}});
  }
  return json{{"meter", record.meter}, {"steps", std::move(steps)}}.dump();
}

SessionRecord session_from_json(std::string_view line) {
  const json j = json::parse(line);
  SessionRecord r;
  r.meter = j.at("meter").get<std::string>();
  for (const auto& s : j.at("steps")) {
    r.steps.push_back({s.at("candidates").get<std::vector<std::string>>(),
                       s.at("survivors").get<std::vector<std::size_t>>(),
                       s.at("accepted").get<std::string>()});
  }
  return r;
}

std::vector<SessionRecord> read_sessions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<SessionRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(session_from_json(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(n) + ": " + e.what(), n);
    }
  }
  return out;
}

}  // namespace chandas::mask
