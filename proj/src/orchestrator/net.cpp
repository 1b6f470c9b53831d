#include "empathd/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "empathd/errors.hpp"
#include "empathd/log.hpp"

namespace empathd::net {

std::int64_t now_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

Socket::~Socket() { close(); }

void Socket::send_all(const std::uint8_t* data, std::size_t n) {
  std::size_t off = 0;
  while (off < n) {
    const ssize_t w = ::send(fd_, data + off, n - off, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(w);
  }
}

std::optional<std::size_t> Socket::recv_some(std::uint8_t* buf, std::size_t cap, int timeoutMs) {
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, timeoutMs);
  if (r == 0) return std::nullopt;
  if (r < 0) {
    if (errno == EINTR) return std::nullopt;
    throw IoError(std::string("poll failed: ") + std::strerror(errno));
  }
  const ssize_t n = ::recv(fd_, buf, cap, 0);
  if (n < 0) {
    if (errno == EINTR || errno == EAGAIN) return std::nullopt;
    throw IoError(std::string("recv failed: ") + std::strerror(errno));
  }
  return static_cast<std::size_t>(n);
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

namespace {

sockaddr_in make_addr(const std::string& host, int port) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &a.sin_addr) != 1) throw ConfigError("invalid IPv4 address '" + host + "'");
  return a;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

TcpListener::TcpListener(int port, const std::string& host) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw IoError(std::string("socket failed: ") + std::strerror(errno));
  sock_ = Socket(fd);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const sockaddr_in a = make_addr(host, port);
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&a), sizeof a) != 0) {
    throw IoError("bind to port " + std::to_string(port) + " failed: " + std::strerror(errno));
  }
  if (::listen(fd, 8) != 0) throw IoError(std::string("listen failed: ") + std::strerror(errno));
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

std::optional<Socket> TcpListener::accept(int timeoutMs) {
  if (!sock_.valid()) return std::nullopt;
  pollfd p{sock_.fd(), POLLIN, 0};
  if (::poll(&p, 1, timeoutMs) <= 0) return std::nullopt;
  const int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return std::nullopt;
  set_nodelay(fd);
  return Socket(fd);
}

Socket connect_tcp(const std::string& host, int port, int timeoutMs) {
  const sockaddr_in a = make_addr(host, port);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeoutMs);
  int backoffMs = 10;
  std::string lastError;
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw IoError(std::string("socket failed: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&a), sizeof a) == 0) {
      set_nodelay(fd);
      return Socket(fd);
    }
    lastError = std::strerror(errno);
    ::close(fd);
    if (std::chrono::steady_clock::now() + std::chrono::milliseconds(backoffMs) > deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(backoffMs));
    backoffMs = std::min(backoffMs * 2, 500);
  }
  throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + lastError);
}

Connection::Connection(Socket sock, MessageHandler onMessage, CloseHandler onClose)
    : sock_(std::move(sock)), onMessage_(std::move(onMessage)), onClose_(std::move(onClose)) {}

void Connection::start() {
  if (reader_.joinable() || writer_.joinable()) return;
  reader_ = std::thread([this] { reader_loop(); });
  writer_ = std::thread([this] { writer_loop(); });
}

Connection::~Connection() { close(); }

void Connection::send(const wire::Message& m, double delayMs) {
  if (!open_) return;
  Pending p;
  p.releaseMicros = now_micros() + static_cast<std::int64_t>(delayMs * 1000.0 + 0.5);
  p.bytes = wire::encode(m);
  {
    std::lock_guard lock(m_);
    p.order = order_++;
    pending_.push(std::move(p));
  }
  cv_.notify_all();
}

void Connection::close() {
  {
    std::lock_guard lock(m_);
    if (stopWriter_ && !reader_.joinable() && !writer_.joinable()) return;
    stopWriter_ = true;
  }
  cv_.notify_all();
  closing_ = true;
  open_ = false;
  sock_.shutdown();
  if (writer_.joinable() && writer_.get_id() != std::this_thread::get_id()) writer_.join();
  if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
  sock_.close();
}

void Connection::fail(const std::string& reason) {
  open_ = false;
  if (closing_) return;
  if (!closeReported_.exchange(true) && onClose_) onClose_(reason);
}

void Connection::reader_loop() {
  wire::StreamDecoder decoder;
  std::vector<std::uint8_t> buf(1 << 16);
  try {
    while (open_) {
      const auto n = sock_.recv_some(buf.data(), buf.size(), 50);
      if (!n) continue;
      if (*n == 0) {
        fail("peer closed the connection");
        return;
      }
      const std::int64_t recv = now_micros();
      decoder.feed(std::span<const std::uint8_t>(buf.data(), *n));
      while (auto m = decoder.next()) {
        ++received_;
        onMessage_(std::move(*m), recv);
      }
    }
  } catch (const ProtocolError& e) {
    log_warn(std::string("protocol error, resetting connection: ") + e.what());
    sock_.shutdown();
    fail(e.what());
  } catch (const std::exception& e) {
    if (open_) log_warn(std::string("connection reader stopped: ") + e.what());
    fail(e.what());
  }
}

void Connection::writer_loop() {
  std::unique_lock lock(m_);
  while (true) {
    if (stopWriter_) return;
    if (pending_.empty()) {
      cv_.wait(lock);
      continue;
    }
    const std::int64_t release = pending_.top().releaseMicros;
    const std::int64_t now = now_micros();
    if (release > now) {
      cv_.wait_for(lock, std::chrono::microseconds(release - now));
      continue;
    }
    Pending p = std::move(const_cast<Pending&>(pending_.top()));
    pending_.pop();
    lock.unlock();
    try {
      sock_.send_all(p.bytes.data(), p.bytes.size());
      ++sent_;
    } catch (const std::exception& e) {
      fail(e.what());
      lock.lock();
      return;
    }
    lock.lock();
  }
}

}  // namespace empathd::net
