#include "chandas/net.hpp"

#include <arpa/inet.h>
#include <csignal>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <utility>

#include "chandas/error.hpp"

namespace chandas::net {
namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  throw Error(ErrorCode::IoError, what + ": " + std::strerror(errno));
}

class ChildChannel final : public LineChannel {
 public:
  ChildChannel(pid_t pid, int read_fd, int write_fd)
      : pid_(pid), io_(std::make_unique<FdChannel>(read_fd, write_fd, true)) {}
  ~ChildChannel() override {
    io_.reset();  // closing stdin lets the child exit
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  void send(std::string_view line) override { io_->send(line); }
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override {
    return io_->receive(timeout);
  }

 private:
  pid_t pid_;
  std::unique_ptr<FdChannel> io_;
};

}  // namespace

FdChannel::FdChannel(int read_fd, int write_fd, bool owns_fds)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns_fds) {
  // A vanished peer should surface as an IoError, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);
}

FdChannel::~FdChannel() {
  if (!owns_) return;
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdChannel::send(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("write");
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdChannel::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      return std::exchange(buffer_, {});
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::Timeout, "timed out waiting for peer");
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      sys_fail("poll");
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("read");
    }
    if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

std::unique_ptr<LineChannel> spawn(const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error(ErrorCode::InvalidArgument, "empty command");
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) sys_fail("pipe");
  if (::pipe(from_child) != 0) sys_fail("pipe");
  const pid_t pid = ::fork();
  if (pid < 0) sys_fail("fork");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ChildChannel>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::IoError, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) sys_fail("connect to " + host + ":" + std::to_string(port));
  return std::make_unique<FdChannel>(fd, fd, true);
}

void serve_tcp(int port, const std::function<void(LineChannel&)>& handler,
               const std::atomic<bool>& stop, const std::function<void(int)>& on_listen) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) sys_fail("socket");
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listener, 16) != 0) {
    ::close(listener);
    sys_fail("listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  while (!stop.load()) {
    pollfd pfd{listener, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) continue;
    workers.emplace_back([fd, &handler] {
      FdChannel channel(fd, fd, true);
      try {
        handler(channel);
      } catch (const std::exception&) {
        // the connection is dropped; other sessions continue
      }
    });
  }
  for (auto& t : workers) t.join();
  ::close(listener);
}

}  // namespace chandas::net
