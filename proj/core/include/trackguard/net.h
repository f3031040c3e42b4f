#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

namespace trackguard::net {

struct HostPort {
  std::string host;
  uint16_t port = 0;

  // "host:port" or "[v6]:port". Throws NetworkError.
  static HostPort parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const HostPort&, const HostPort&) = default;
};

// Owning TCP socket. Reads and writes block; timeouts come from
// set_timeout().
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  // 0 at end of stream. Throws NetworkError.
  std::size_t read_some(std::span<char> buffer);
  void write_all(std::string_view data);
  void set_timeout(std::chrono::milliseconds timeout);
  void shutdown_write();
  void shutdown_both();
  void close();

 private:
  int fd_ = -1;
};

// Throws NetworkError when resolution or connect fails.
Socket connect_tcp(const std::string& host, uint16_t port,
                   std::chrono::milliseconds timeout);

// Buffered reader over a socket, used for HTTP framing.
class StreamReader {
 public:
  explicit StreamReader(Socket& socket) : socket_(socket) {}

  // Bytes up to and including the blank line that ends a message head.
  // nullopt on clean EOF before any byte. Throws HttpParseError when the head
  // exceeds max_bytes or the stream ends mid-head.
  std::optional<std::string> read_head(std::size_t max_bytes = 64 * 1024);
  // A CRLF-terminated line including the terminator.
  std::string read_line(std::size_t max_bytes = 8 * 1024);
  // Calls sink with at most `count` bytes in chunks; throws if the stream
  // ends early.
  void read_exact(uint64_t count, const std::function<void(std::string_view)>& sink);
  // Forwards everything until EOF; returns byte count.
  uint64_t read_to_end(const std::function<void(std::string_view)>& sink);
  // Bytes buffered but not yet consumed.
  std::string take_buffered();

 private:
  bool fill();

  Socket& socket_;
  std::string buffer_;
  std::size_t offset_ = 0;
};

// Accept loop that hands each connection to a handler thread. Counts
// accepted connections, which fixture servers use to prove that blocked
// requests never reached them.
class TcpServer {
 public:
  using Handler = std::function<void(Socket&)>;

  TcpServer() = default;
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  // Port 0 picks an ephemeral port. Throws NetworkError.
  void start(const HostPort& listen, Handler handler);
  // Closes the listener, shuts down live connections and waits for handlers.
  void stop();

  uint16_t port() const { return port_; }
  HostPort address() const { return {host_, port_}; }
  uint64_t accepted() const { return accepted_.load(); }
  void reset_accepted() { accepted_ = 0; }

  // Connections registered here are shut down by stop(); handlers use it
  // for secondary sockets such as upstream legs of a tunnel.
  void track(int fd);
  void untrack(int fd);

 private:
  void accept_loop();

  Handler handler_;
  std::string host_;
  uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::atomic<uint64_t> accepted_{0};
  std::thread accept_thread_;

  std::mutex mu_;
  std::condition_variable idle_;
  std::set<int> live_fds_;
  std::size_t active_handlers_ = 0;
};

}  // namespace trackguard::net
