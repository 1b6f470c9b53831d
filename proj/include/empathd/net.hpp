#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "empathd/wire.hpp"

namespace empathd::net {

// Microseconds on the host monotonic clock (shared by processes on one host).
std::int64_t now_micros();

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void send_all(const std::uint8_t* data, std::size_t n);  // throws IoError
  // Returns bytes read, 0 on orderly close, nullopt on timeout.
  std::optional<std::size_t> recv_some(std::uint8_t* buf, std::size_t cap, int timeoutMs);
  void shutdown();
  void close();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  // Port 0 binds an ephemeral port.
  explicit TcpListener(int port, const std::string& host = "127.0.0.1");
  int port() const { return port_; }
  std::optional<Socket> accept(int timeoutMs);
  void close() { sock_.close(); }

 private:
  Socket sock_;
  int port_ = 0;
};

// Retries with exponential backoff until the deadline.
Socket connect_tcp(const std::string& host, int port, int timeoutMs);

// Fixed-depth FIFO that discards the oldest entry when full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t depth) : depth_(depth) {}

  // Returns true when an older entry was dropped to make room.
  bool push(T v) {
    bool dropped = false;
    {
      std::lock_guard lock(m_);
      if (q_.size() >= depth_) {
        q_.pop_front();
        ++drops_;
        dropped = true;
      }
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
    return dropped;
  }

  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(m_);
    if (!cv_.wait_for(lock, timeout, [&] { return !q_.empty() || closed_; })) return std::nullopt;
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(m_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::uint64_t drops() const {
    std::lock_guard lock(m_);
    return drops_;
  }

 private:
  std::size_t depth_;
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<T> q_;
  std::uint64_t drops_ = 0;
  bool closed_ = false;
};

// A framed message connection: a reader thread decoding into a callback and
// a writer thread that releases each message at its scheduled time, which is
// how a per-hop network delay is injected.
class Connection {
 public:
  using MessageHandler = std::function<void(wire::Message&&, std::int64_t recvMicros)>;
  using CloseHandler = std::function<void(const std::string& reason)>;

  Connection(Socket sock, MessageHandler onMessage, CloseHandler onClose = {});
  ~Connection();
  // Launches the reader and writer; handlers may run from then on.
  void start();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  // Encodes now; the bytes hit the socket delayMs later. Messages with equal
  // delays keep their order. sentMicros fields are left to the caller.
  void send(const wire::Message& m, double delayMs = 0.0);
  void close();
  bool open() const { return open_.load(); }
  std::uint64_t messages_sent() const { return sent_.load(); }
  std::uint64_t messages_received() const { return received_.load(); }

 private:
  struct Pending {
    std::int64_t releaseMicros;
    std::uint64_t order;
    std::vector<std::uint8_t> bytes;
    bool operator>(const Pending& o) const {
      return releaseMicros != o.releaseMicros ? releaseMicros > o.releaseMicros : order > o.order;
    }
  };

  void reader_loop();
  void writer_loop();
  void fail(const std::string& reason);

  Socket sock_;
  MessageHandler onMessage_;
  CloseHandler onClose_;
  std::atomic<bool> open_{true};
  std::atomic<bool> closeReported_{false};
  std::atomic<bool> closing_{false};
  std::atomic<std::uint64_t> sent_{0}, received_{0};
  std::mutex m_;
  std::condition_variable cv_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending_;
  std::uint64_t order_ = 0;
  bool stopWriter_ = false;
  std::thread reader_, writer_;
};

}  // namespace empathd::net
