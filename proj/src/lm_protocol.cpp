#include "chandas/lm_protocol.hpp"

#include <algorithm>
#include <cmath>

#include "chandas/error.hpp"
#include "json.hpp"

namespace chandas::lm {
namespace {

using json = nlohmann::json;

std::string error_frame(std::string_view message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

class RemoteStepQuery final : public StepQuery {
 public:
  RemoteStepQuery(RemoteModel& model, std::span<const TokenId> context)
      : model_(model), context_(context.begin(), context.end()) {}

  std::span<const Candidate> top(std::size_t m) override {
    m = std::min(m, model_.vocab().size());
    if (m > asked_) {
      got_ = model_.request(context_, m);
      asked_ = m;
    }
    return {got_.data(), std::min(m, got_.size())};
  }

 private:
  RemoteModel& model_;
  std::vector<TokenId> context_;
  std::vector<Candidate> got_;
  std::size_t asked_ = 0;
};

}  // namespace

void serve(LanguageModel& model, net::LineChannel& channel) {
  const Vocab& vocab = model.vocab();
  bool greeted = false;
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
      if (type == "vocab") {
        channel.send(json{{"type", "vocab"}, {"tokens", vocab.tokens()}}.dump());
      } else if (type == "hello") {
        if (frame.value("vocab_hash", "") != vocab.digest()) {
          channel.send(error_frame("vocab hash mismatch"));
          continue;
        }
        greeted = true;
        channel.send(json{{"type", "ok"}, {"vocab_size", vocab.size()}}.dump());
      } else if (type == "next") {
        if (!greeted) {
          channel.send(error_frame("hello required before next"));
          continue;
        }
        const auto context = frame.at("context").get<std::vector<TokenId>>();
        const auto m = frame.value("m", std::size_t{25});
        auto query = model.query(context);
        json top = json::array();
        for (const auto& c : query->top(m)) top.push_back({c.id, std::log(c.prob)});
        channel.send(json{{"type", "dist"}, {"top", std::move(top)}}.dump());
      } else {
        channel.send(error_frame("unknown frame type '" + type + "'"));
      }
    } catch (const json::exception& e) {
      channel.send(error_frame(std::string("bad frame: ") + e.what()));
    } catch (const Error& e) {
      channel.send(error_frame(e.what()));
    }
  }
}

RemoteModel::RemoteModel(std::unique_ptr<net::LineChannel> channel, std::optional<Vocab> vocab,
                         std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), timeout_(timeout) {
  try {
    if (vocab) {
      vocab_ = std::move(*vocab);
    } else {
      const json reply = json::parse(exchange(json{{"type", "vocab"}}.dump()));
      if (reply.at("type") != "vocab") throw Error(ErrorCode::ProtocolError, "expected a vocab frame");
      vocab_ = Vocab(reply.at("tokens").get<std::vector<std::string>>());
    }
    const json ok =
        json::parse(exchange(json{{"type", "hello"}, {"vocab_hash", vocab_.digest()}}.dump()));
    if (ok.at("type") != "ok") throw Error(ErrorCode::ProtocolError, "expected ok after hello");
    if (ok.at("vocab_size").get<std::size_t>() != vocab_.size()) {
      throw Error(ErrorCode::ProtocolError, "server vocab size differs");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed handshake reply: ") + e.what());
  }
}

RemoteModel::~RemoteModel() {
  try {
    channel_->send(json{{"type", "bye"}}.dump());
  } catch (const std::exception&) {
    // peer already gone
  }
}

std::string RemoteModel::exchange(const std::string& frame) {
  channel_->send(frame);
  auto line = channel_->receive(timeout_);
  if (!line) throw Error(ErrorCode::ProtocolError, "server closed the connection");
  json reply;
  try {
    reply = json::parse(*line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::ProtocolError, "malformed frame from server");
  }
  if (!reply.is_object() || !reply.contains("type")) {
    throw Error(ErrorCode::ProtocolError, "frame without a type");
  }
  if (reply["type"] == "error") {
    throw Error(ErrorCode::ProtocolError, "server error: " + reply.value("message", std::string()));
  }
  return *line;
}

std::vector<Candidate> RemoteModel::request(std::span<const TokenId> context, std::size_t m) {
  ++requests_;
  const json frame = {{"type", "next"},
                      {"context", std::vector<TokenId>(context.begin(), context.end())},
                      {"m", m}};
  std::vector<Candidate> out;
  try {
    const json reply = json::parse(exchange(frame.dump()));
    if (reply.at("type") != "dist") throw Error(ErrorCode::ProtocolError, "expected a dist frame");
    for (const auto& pair : reply.at("top")) {
      const auto id = pair.at(0).get<TokenId>();
      const auto logprob = pair.at(1).get<double>();
      if (id >= vocab_.size()) throw Error(ErrorCode::ProtocolError, "dist names an unknown id");
      if (!std::isfinite(logprob) || logprob > 1e-9) {
        throw Error(ErrorCode::ProtocolError, "dist carries an invalid log-probability");
      }
      out.push_back({id, std::exp(logprob)});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed dist frame: ") + e.what());
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.id < b.id;
  });
  if (out.size() > m) out.resize(m);
  return out;
}

std::unique_ptr<StepQuery> RemoteModel::query(std::span<const TokenId> context) {
  return std::make_unique<RemoteStepQuery>(*this, context);
}

}  // namespace chandas::lm
