#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "efhmm/error.hpp"

namespace efhmm::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "host:port"; an empty host means all interfaces when binding.
inline Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  require(colon != std::string_view::npos, ErrorCode::invalid_argument,
          "address '" + std::string(text) + "' must look like host:port");
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  const std::string port(text.substr(colon + 1));
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  require(!port.empty() && *end == '\0' && p >= 0 && p <= 65535, ErrorCode::invalid_argument,
          "invalid port in '" + std::string(text) + "'");
  e.port = static_cast<std::uint16_t>(p);
  return e;
}

inline std::string errno_text() { return std::strerror(errno); }

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  void close() noexcept {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  /// Unblocks any thread waiting in accept/recv on this socket.
  void shutdown_both() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

  void shutdown_write() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
  }

  void send_all(std::string_view data) const {
    while (!data.empty()) {
      const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::io, "send failed: " + errno_text());
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
};

inline addrinfo* resolve(const Endpoint& e, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(e.port);
  const int rc = ::getaddrinfo(e.host.empty() ? nullptr : e.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) fail(ErrorCode::io, "cannot resolve '" + e.host + "': " + ::gai_strerror(rc));
  return res;
}

inline Socket connect_tcp(const Endpoint& e) {
  addrinfo* res = resolve(e, false);
  Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!s.valid()) {
    ::freeaddrinfo(res);
    fail(ErrorCode::io, "socket failed: " + errno_text());
  }
  const int rc = ::connect(s.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) fail(ErrorCode::io, "connect to " + e.host + ":" + std::to_string(e.port) + " failed: " + errno_text());
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

inline Socket listen_tcp(const Endpoint& e, int backlog = 16) {
  addrinfo* res = resolve(e, true);
  Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!s.valid()) {
    ::freeaddrinfo(res);
    fail(ErrorCode::io, "socket failed: " + errno_text());
  }
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int rc = ::bind(s.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) fail(ErrorCode::io, "bind to port " + std::to_string(e.port) + " failed: " + errno_text());
  if (::listen(s.fd(), backlog) != 0) fail(ErrorCode::io, "listen failed: " + errno_text());
  return s;
}

inline std::uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    fail(ErrorCode::io, "getsockname failed: " + errno_text());
  }
  return ntohs(addr.sin_port);
}

/// Returns an invalid socket once the listener has been shut down.
inline Socket accept_tcp(const Socket& listener) {
  while (true) {
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

/// Splits a byte stream into newline-terminated lines.
class LineReader {
 public:
  explicit LineReader(const Socket& s, std::size_t max_line = 1 << 20) : socket_(s), max_line_(max_line) {}

  /// Next line without its terminator; nullopt on orderly EOF.
  std::optional<std::string> next() {
    while (true) {
      const auto nl = buffer_.find('\n', scanned_);
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        scanned_ = 0;
        return line;
      }
      scanned_ = buffer_.size();
      require(buffer_.size() <= max_line_, ErrorCode::protocol, "line exceeds " + std::to_string(max_line_) + " bytes");
      char chunk[8192];
      const ssize_t n = ::recv(socket_.fd(), chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::io, "recv failed: " + errno_text());
      }
      if (n == 0) {
        if (buffer_.empty()) return std::nullopt;
        fail(ErrorCode::protocol, "connection closed mid-line");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  const Socket& socket_;
  std::size_t max_line_;
  std::string buffer_;
  std::size_t scanned_ = 0;
};

}  // namespace efhmm::net
