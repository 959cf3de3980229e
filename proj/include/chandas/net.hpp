#pragma once

// Newline-delimited message transport over file descriptors, child processes
// and TCP (POSIX).

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chandas::net {

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  // Writes `line` followed by '\n'.
  virtual void send(std::string_view line) = 0;
  // Next line without its terminator; nullopt once the peer has closed.
  // Raises Error(Timeout) when nothing arrives in time.
  virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
};

class FdChannel final : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owns_fds);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void send(std::string_view line) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  std::string buffer_;
  bool eof_ = false;
};

// Runs argv[0] with its stdin/stdout connected to the returned channel. The
// child is reaped when the channel is destroyed.
std::unique_ptr<LineChannel> spawn(const std::vector<std::string>& argv);

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port);

// Listens on 127.0.0.1:`port` (0 picks a free port, reported through
// `on_listen`) and runs `handler` for each connection on its own thread until
// `stop` becomes true.
void serve_tcp(int port, const std::function<void(LineChannel&)>& handler,
               const std::atomic<bool>& stop, const std::function<void(int)>& on_listen = {});

}  // namespace chandas::net
