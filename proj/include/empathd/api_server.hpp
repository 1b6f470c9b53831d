#pragma once

#include <memory>
#include <string>

#include "empathd/orchestrator.hpp"

namespace empathd {

struct ApiResponse {
  int status = 200;
  std::string contentType = "application/json";
  std::string body;
};

// Routes one dashboard request. Pure apart from reading and swapping the
// shared profile; the network server is a thin transport over it.
ApiResponse handle_api_request(SharedState& state, const std::string& method, const std::string& target,
                               const std::string& body);

// JSON pushed on the stream socket: latest preview seq plus the stats snapshot.
std::string stream_message(const SharedState& state);

// HTTP + WebSocket server on one port.
class ApiServer {
 public:
  ApiServer(std::shared_ptr<SharedState> state, int port, const std::string& host = "127.0.0.1");
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  void start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace empathd
