#pragma once

// NDJSON protocol for external token-probability sources.
//
//   {"type":"vocab"}                          -> {"type":"vocab","tokens":[...]}
//   {"type":"hello","vocab_hash":H}           -> {"type":"ok","vocab_size":N}
//   {"type":"next","context":[ids],"m":M}     -> {"type":"dist","top":[[id,logprob],...]}
//   {"type":"bye"}
//
// Failures are answered with {"type":"error","message":...}.

#include <chrono>
#include <memory>
#include <optional>

#include "chandas/lm.hpp"
#include "chandas/net.hpp"

namespace chandas::lm {

inline constexpr std::chrono::milliseconds kDefaultTimeout{30000};

// Answers frames until bye or end of input.
void serve(LanguageModel& model, net::LineChannel& channel);

class RemoteModel final : public LanguageModel {
 public:
  // Fetches the vocab when none is given, then shakes hands. Raises
  // Error(ProtocolError) on a rejected handshake or malformed reply.
  explicit RemoteModel(std::unique_ptr<net::LineChannel> channel,
                       std::optional<Vocab> vocab = std::nullopt,
                       std::chrono::milliseconds timeout = kDefaultTimeout);
  ~RemoteModel() override;

  const Vocab& vocab() const override { return vocab_; }
  std::unique_ptr<StepQuery> query(std::span<const TokenId> context) override;

  // Top-m pairs as sent by the server, validated and sorted.
  std::vector<Candidate> request(std::span<const TokenId> context, std::size_t m);
  std::size_t requests() const { return requests_; }

 private:
  std::string exchange(const std::string& frame);

  std::unique_ptr<net::LineChannel> channel_;
  Vocab vocab_;
  std::chrono::milliseconds timeout_;
  std::size_t requests_ = 0;
};

}  // namespace chandas::lm
