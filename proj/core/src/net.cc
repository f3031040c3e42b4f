#include "trackguard/net.h"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "trackguard/errors.h"

namespace trackguard::net {
namespace {

std::string errno_message(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

void set_nonblocking(int fd, bool enabled) {
  int flags = fcntl(fd, F_GETFL, 0);
  if (flags < 0) return;
  fcntl(fd, F_SETFL, enabled ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
}

}  // namespace

HostPort HostPort::parse(std::string_view text) {
  HostPort out;
  std::string_view port_text;
  if (!text.empty() && text.front() == '[') {
    auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() ||
        text[close + 1] != ':') {
      throw NetworkError("expected [host]:port, got " + std::string(text));
    }
    out.host = std::string(text.substr(1, close - 1));
    port_text = text.substr(close + 2);
  } else {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
      throw NetworkError("expected host:port, got " + std::string(text));
    }
    out.host = std::string(text.substr(0, colon));
    port_text = text.substr(colon + 1);
  }
  unsigned value = 0;
  auto [ptr, ec] =
      std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() ||
      value > 65535 || out.host.empty()) {
    throw NetworkError("invalid address " + std::string(text));
  }
  out.port = static_cast<uint16_t>(value);
  return out;
}

std::string HostPort::to_string() const {
  if (host.find(':') != std::string::npos) {
    return "[" + host + "]:" + std::to_string(port);
  }
  return host + ":" + std::to_string(port);
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

std::size_t Socket::read_some(std::span<char> buffer) {
  for (;;) {
    ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    throw NetworkError(errno_message("recv"));
  }
}

void Socket::write_all(std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(errno_message("send"));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void Socket::set_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void Socket::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket connect_tcp(const std::string& host, uint16_t port,
                   std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* results = nullptr;
  std::string service = std::to_string(port);
  int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &results);
  if (rc != 0) {
    throw NetworkError("resolve " + host + ": " + gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(results, freeaddrinfo);

  std::string last_error = "no addresses for " + host;
  for (addrinfo* ai = results; ai; ai = ai->ai_next) {
    Socket socket(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!socket.valid()) {
      last_error = errno_message("socket");
      continue;
    }
    set_nonblocking(socket.fd(), true);
    int result = ::connect(socket.fd(), ai->ai_addr, ai->ai_addrlen);
    if (result < 0 && errno == EINPROGRESS) {
      pollfd pfd{socket.fd(), POLLOUT, 0};
      int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (ready <= 0) {
        last_error = "connect " + host + ": timed out";
        continue;
      }
      int error = 0;
      socklen_t len = sizeof(error);
      getsockopt(socket.fd(), SOL_SOCKET, SO_ERROR, &error, &len);
      if (error != 0) {
        last_error = "connect " + host + ": " + std::strerror(error);
        continue;
      }
    } else if (result < 0) {
      last_error = errno_message("connect " + host);
      continue;
    }
    set_nonblocking(socket.fd(), false);
    int one = 1;
    setsockopt(socket.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return socket;
  }
  throw NetworkError(last_error);
}

bool StreamReader::fill() {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  char chunk[16 * 1024];
  std::size_t n = socket_.read_some(chunk);
  if (n == 0) return false;
  buffer_.append(chunk, n);
  return true;
}

std::optional<std::string> StreamReader::read_head(std::size_t max_bytes) {
  // Bytes past offset_ already searched.
  std::size_t scanned = 0;
  for (;;) {
    std::size_t from = offset_ + (scanned > 3 ? scanned - 3 : 0);
    auto end = buffer_.find("\r\n\r\n", from);
    if (end != std::string::npos) {
      std::string head = buffer_.substr(offset_, end + 4 - offset_);
      offset_ = end + 4;
      return head;
    }
    if (buffer_.size() - offset_ > max_bytes) {
      throw HttpParseError("message head too large");
    }
    scanned = buffer_.size() - offset_;
    bool had_data = scanned > 0;
    if (!fill()) {
      if (!had_data) return std::nullopt;
      throw HttpParseError("connection closed inside message head");
    }
  }
}

std::string StreamReader::read_line(std::size_t max_bytes) {
  for (;;) {
    auto end = buffer_.find("\r\n", offset_);
    if (end != std::string::npos) {
      std::string line = buffer_.substr(offset_, end + 2 - offset_);
      offset_ = end + 2;
      return line;
    }
    if (buffer_.size() - offset_ > max_bytes) throw HttpParseError("line too long");
    if (!fill()) throw HttpParseError("connection closed inside a line");
  }
}

void StreamReader::read_exact(uint64_t count,
                              const std::function<void(std::string_view)>& sink) {
  while (count > 0) {
    if (offset_ == buffer_.size() && !fill()) {
      throw HttpParseError("connection closed inside message body");
    }
    std::size_t available = buffer_.size() - offset_;
    std::size_t take = static_cast<std::size_t>(
        std::min<uint64_t>(available, count));
    sink(std::string_view(buffer_).substr(offset_, take));
    offset_ += take;
    count -= take;
  }
}

uint64_t StreamReader::read_to_end(
    const std::function<void(std::string_view)>& sink) {
  uint64_t total = 0;
  for (;;) {
    if (offset_ < buffer_.size()) {
      std::string_view rest = std::string_view(buffer_).substr(offset_);
      sink(rest);
      total += rest.size();
      offset_ = buffer_.size();
    }
    if (!fill()) return total;
  }
}

std::string StreamReader::take_buffered() {
  std::string rest = buffer_.substr(offset_);
  buffer_.clear();
  offset_ = 0;
  return rest;
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start(const HostPort& listen, Handler handler) {
  handler_ = std::move(handler);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* results = nullptr;
  std::string service = std::to_string(listen.port);
  int rc = getaddrinfo(listen.host.empty() ? nullptr : listen.host.c_str(),
                       service.c_str(), &hints, &results);
  if (rc != 0) throw NetworkError("resolve " + listen.host + ": " + gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(results, freeaddrinfo);

  int fd = ::socket(results->ai_family, results->ai_socktype, results->ai_protocol);
  if (fd < 0) throw NetworkError(errno_message("socket"));
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, results->ai_addr, results->ai_addrlen) < 0) {
    std::string message = errno_message("bind " + listen.to_string());
    ::close(fd);
    throw NetworkError(message);
  }
  if (::listen(fd, 256) < 0) {
    std::string message = errno_message("listen");
    ::close(fd);
    throw NetworkError(message);
  }
  sockaddr_storage bound{};
  socklen_t len = sizeof(bound);
  getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.ss_family == AF_INET6
                    ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                    : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  host_ = listen.host;
  listen_fd_ = fd;
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (errno == EMFILE || errno == ENFILE) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        continue;
      }
      break;
    }
    ++accepted_;
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    {
      std::lock_guard lock(mu_);
      if (!running_) {
        ::close(fd);
        break;
      }
      live_fds_.insert(fd);
      ++active_handlers_;
    }
    std::thread([this, fd] {
      Socket socket(fd);
      try {
        handler_(socket);
      } catch (...) {
        // A failed connection only affects its own client.
      }
      std::lock_guard lock(mu_);
      live_fds_.erase(fd);
      socket.close();
      --active_handlers_;
      idle_.notify_all();
    }).detach();
  }
}

void TcpServer::track(int fd) {
  std::lock_guard lock(mu_);
  live_fds_.insert(fd);
  if (!running_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::untrack(int fd) {
  std::lock_guard lock(mu_);
  live_fds_.erase(fd);
}

void TcpServer::stop() {
  bool was_running = running_.exchange(false);
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (!was_running) return;
  std::unique_lock lock(mu_);
  for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  idle_.wait(lock, [this] { return active_handlers_ == 0; });
}

}  // namespace trackguard::net
