#include "empathd/api_server.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <charconv>
#include <thread>

#include "empathd/errors.hpp"
#include "empathd/io.hpp"
#include "empathd/log.hpp"

namespace empathd {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kStatsWindow = 500;
constexpr auto kPushInterval = std::chrono::milliseconds(500);

ApiResponse json_response(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

ApiResponse png_response(const Image& img) {
  const auto bytes = encode_png(img);
  return {200, "image/png", std::string(bytes.begin(), bytes.end())};
}

std::string query_param(const std::string& query, const std::string& key) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    const std::size_t end = std::min(query.find('&', pos), query.size());
    const std::string pair = query.substr(pos, end - pos);
    const std::size_t eq = pair.find('=');
    if (pair.substr(0, eq) == key) return eq == std::string::npos ? "" : pair.substr(eq + 1);
    pos = end + 1;
  }
  return {};
}

nlohmann::json profile_body(const VersionedProfile& p) {
  nlohmann::json j = profile_to_json(p.profile);
  j["version"] = p.version;
  return j;
}

ApiResponse put_profile(SharedState& state, const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("body is not JSON: ") + e.what());
  }
  ImpairmentProfile profile;
  try {
    profile = profile_from_json(j);
  } catch (const ConfigError& e) {
    return json_response(422, {{"error", e.what()}, {"violations", nlohmann::json::array()}});
  }
  const auto violations = state.set_profile(profile);
  if (!violations.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : violations) {
      list.push_back({{"filterIndex", v.filterIndex}, {"field", v.field}, {"message", v.message}});
    }
    return json_response(422, {{"error", "profile rejected"}, {"violations", list}});
  }
  return json_response(200, profile_body(*state.profile()));
}

ApiResponse calibration_chart_response(SharedState& state, const std::string& query) {
  int fontSp = 12;
  const std::string v = query_param(query, "fontSp");
  if (!v.empty()) {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), fontSp);
    if (ec != std::errc() || ptr != v.data() + v.size() || fontSp <= 0 || fontSp > 200) {
      return error_response(400, "fontSp must be an integer in [1, 200]");
    }
  }
  Image chart = calibration_chart(fontSp, state.display);
  if (query_param(query, "raw") != "1") chart = apply_visual_profile(chart, state.profile()->profile);
  return png_response(chart);
}

}  // namespace

std::string stream_message(const SharedState& state) {
  const auto preview = state.preview();
  nlohmann::json j;
  j["frameSeq"] = preview ? preview->seq : 0;
  j["profileVersion"] = state.profile()->version;
  j["stats"] = state.recorder().report(kStatsWindow).to_json();
  return j.dump();
}

ApiResponse handle_api_request(SharedState& state, const std::string& method, const std::string& target,
                               const std::string& body) {
  const std::size_t q = target.find('?');
  const std::string path = target.substr(0, q);
  const std::string query = q == std::string::npos ? "" : target.substr(q + 1);

  if (method == "OPTIONS") return {204, "text/plain", ""};
  if (path == "/api/profile") {
    if (method == "GET") return json_response(200, profile_body(*state.profile()));
    if (method == "PUT") return put_profile(state, body);
    return error_response(405, "method not allowed");
  }
  if (method != "GET") return error_response(405, "method not allowed");
  if (path == "/api/preview.png" || path == "/api/preview/raw.png") {
    const auto p = state.preview();
    if (!p) return error_response(404, "no frame rendered yet");
    return png_response(path == "/api/preview.png" ? p->filtered : p->raw);
  }
  if (path == "/api/stats") return json_response(200, state.recorder().report(kStatsWindow).to_json());
  if (path == "/api/calibration/chart.png") return calibration_chart_response(state, query);
  return error_response(404, "no such endpoint: " + path);
}

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<SharedState> state)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), state_(std::move(state)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
      self->push();
    });
  }

 private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  void push() {
    if (closed_) return;
    out_ = stream_message(*state_);
    ws_.text(true);
    ws_.async_write(asio::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->timer_.expires_after(kPushInterval);
      self->timer_.async_wait([self](beast::error_code ec2) {
        if (!ec2) self->push();
      });
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  std::shared_ptr<SharedState> state_;
  beast::flat_buffer in_;
  std::string out_;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<SharedState> state)
      : stream_(std::move(socket)), state_(std::move(state)) {}

  void run() {
    asio::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/api/stream") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), state_)->run(std::move(req_));
      }
      return;
    }
    ApiResponse r;
    try {
      r = handle_api_request(*state_, std::string(req_.method_string()), std::string(req_.target()), req_.body());
    } catch (const std::exception& e) {
      r = {500, "application/json", nlohmann::json{{"error", e.what()}}.dump()};
    }
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(r.status),
                                                                   req_.version());
    res->set(http::field::server, "empathd");
    res->set(http::field::content_type, r.contentType);
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_methods, "GET, PUT, OPTIONS");
    res->set(http::field::access_control_allow_headers, "Content-Type");
    res->set(http::field::cache_control, "no-store");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(r.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec2, std::size_t) {
      if (ec2 || !res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<SharedState> state_;
};

}  // namespace

struct ApiServer::Impl {
  std::shared_ptr<SharedState> state;
  asio::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpSession>(std::move(socket), state)->run();
      accept();
    });
  }
};

ApiServer::ApiServer(std::shared_ptr<SharedState> state, int port, const std::string& host)
    : impl_(std::make_unique<Impl>()) {
  impl_->state = std::move(state);
  beast::error_code ec;
  const auto address = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) throw ConfigError("invalid listen address '" + host + "'");
  const tcp::endpoint ep(address, static_cast<unsigned short>(port));
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep, ec);
  if (ec) throw IoError("api server: cannot bind port " + std::to_string(port) + ": " + ec.message());
  impl_->acceptor.listen();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void ApiServer::start() {
  if (impl_->thread.joinable()) return;
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void ApiServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->ioc.stop();
  impl_->thread.join();
}

}  // namespace empathd
