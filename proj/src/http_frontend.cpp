#include "http_frontend.hpp"

#include <deque>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "peakray/image_io.hpp"
#include "peakray/sample_json.hpp"
#include "peakray/service.hpp"

namespace peakray {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

json events_json(const EventLog& events) {
  json out = json::array();
  for (const auto& e : events) out.push_back({{"kind", to_string(e.kind)}, {"detail", e.detail}});
  return out;
}

json error_body(std::string_view kind, std::string_view message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

std::string_view mime_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

std::pair<std::string_view, std::string_view> split_target(beast::string_view raw) {
  const std::string_view target(raw.data(), raw.size());
  const auto q = target.find('?');
  if (q == std::string_view::npos) return {target, {}};
  return {target.substr(0, q), target.substr(q + 1)};
}

json hello_message(Service& service) {
  const auto snap = service.snapshot();
  return {{"type", "hello"},
          {"version", snap->version},
          {"tf", json::parse(service.tf_json())},
          {"session", service.session_json()}};
}

// Parses a client-side stream message and applies it. Returns the reply.
json handle_stream_command(Service& service, const std::string& text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception& e) {
    return {{"type", "error"}, {"kind", "parse"}, {"message", e.what()}};
  }
  const std::string type = msg.value("type", "");
  try {
    if (type == "sample") {
      const auto events = service.inject(sample_from_json(msg.at("sample")));
      return {{"type", "ack"}, {"of", "sample"}, {"events", events_json(events)}, {"version", service.snapshot()->version}};
    }
    if (type == "set_tf") {
      const auto r = service.set_tf(msg.at("tf").dump());
      if (!r.ok) return {{"type", "error"}, {"kind", r.error_kind}, {"message", r.message}};
      return {{"type", "ack"}, {"of", "set_tf"}, {"version", service.snapshot()->version}};
    }
    if (type == "request_frame") {
      service.request_frame();
      return {{"type", "ack"}, {"of", "request_frame"}};
    }
  } catch (const std::exception& e) {
    return {{"type", "error"}, {"kind", "invalid"}, {"message", e.what()}};
  }
  return {{"type", "error"}, {"kind", "unknown_type"}, {"message", "unknown message type '" + type + "'"}};
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Service& service) : ws_(std::move(socket)), service_(service) {}

  ~WsSession() {
    if (listener_) service_.unsubscribe(*listener_);
  }

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_accept();
    });
  }

 private:
  void on_accept() {
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    listener_ = service_.subscribe([weak, executor](std::shared_ptr<const StreamMessage> m) {
      asio::post(executor, [weak, m] {
        if (auto self = weak.lock()) self->send(m);
      });
    });
    send(std::make_shared<const StreamMessage>(StreamMessage{false, hello_message(service_).dump()}));
    if (auto frame = service_.latest_frame()) {
      json meta = {{"type", "frame"},
                   {"sequence", frame->sequence},
                   {"render_version", frame->render_version},
                   {"width", frame->frame.width},
                   {"height", frame->frame.height},
                   {"bytes", frame->png.size()}};
      send(std::make_shared<const StreamMessage>(StreamMessage{false, meta.dump()}));
      send(std::make_shared<const StreamMessage>(StreamMessage{true, std::string(frame->png.begin(), frame->png.end())}));
    }
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      const json reply = handle_stream_command(self->service_, text);
      self->send(std::make_shared<const StreamMessage>(StreamMessage{false, reply.dump()}));
      self->read();
    });
  }

  void send(std::shared_ptr<const StreamMessage> m) {
    // Slow clients lose the oldest pending frames rather than growing without bound.
    if (queue_.size() > 64) {
      for (auto it = queue_.begin() + 1; it != queue_.end(); ++it) {
        if ((*it)->binary) {
          queue_.erase(it);
          break;
        }
      }
    }
    queue_.push_back(std::move(m));
    if (queue_.size() == 1) write();
  }

  void write() {
    const auto& m = queue_.front();
    ws_.binary(m->binary);
    ws_.async_write(asio::buffer(m->payload), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Service& service_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const StreamMessage>> queue_;
  std::optional<std::uint64_t> listener_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Service& service, const std::optional<std::filesystem::path>& static_dir)
      : stream_(std::move(socket)), service_(service), static_dir_(static_dir) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

  void on_request() {
    if (websocket::is_upgrade(req_)) {
      if (split_target(req_.target()).first == "/stream") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), service_)->run(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<Response>(route());
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::server, "peakray");
    res->set(http::field::access_control_allow_origin, "*");
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  Response reply(http::status status, std::string body, std::string_view type) {
    Response res{status, req_.version()};
    res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res.body() = std::move(body);
    return res;
  }

  Response reply_json(http::status status, const json& body) {
    return reply(status, body.dump(), "application/json");
  }

  Response route() {
    const auto [path, query] = split_target(req_.target());
    const auto method = req_.method();

    if (method == http::verb::options) {
      auto res = reply(http::status::no_content, {}, "text/plain");
      res.set(http::field::access_control_allow_methods, "GET, PUT, POST, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type");
      return res;
    }

    try {
      if (path == "/state/tf") {
        if (method == http::verb::get) return reply(http::status::ok, service_.tf_json(), "application/json");
        if (method == http::verb::put) {
          const auto r = service_.set_tf(req_.body());
          if (!r.ok) return reply_json(http::status::bad_request, error_body(r.error_kind, r.message));
          return reply(http::status::ok, service_.tf_json(), "application/json");
        }
        return method_not_allowed();
      }
      if (path == "/state/histogram") {
        if (method != http::verb::get) return method_not_allowed();
        const auto& h = service_.histogram();
        return reply_json(http::status::ok, {{"bins", h.bins}, {"total", h.total()}});
      }
      if (path == "/state/clip") {
        if (method != http::verb::get) return method_not_allowed();
        const auto c = service_.clip_plane();
        return reply_json(http::status::ok,
                          {{"normal", {c.normal.x, c.normal.y, c.normal.z}}, {"offset", c.offset}, {"enabled", c.enabled}});
      }
      if (path == "/state/session") {
        if (method != http::verb::get) return method_not_allowed();
        return reply_json(http::status::ok, service_.session_json());
      }
      if (path == "/stats") {
        if (method != http::verb::get) return method_not_allowed();
        return reply_json(http::status::ok, service_.stats_json());
      }
      if (path == "/input/sample") {
        if (method != http::verb::post) return method_not_allowed();
        ControllerSample s;
        try {
          s = sample_from_json(json::parse(req_.body()));
        } catch (const std::exception& e) {
          return reply_json(http::status::bad_request, error_body("invalid_sample", e.what()));
        }
        const auto events = service_.inject(s);
        return reply_json(http::status::ok, {{"events", events_json(events)}, {"version", service_.snapshot()->version}});
      }
      if (path == "/frame/request") {
        if (method != http::verb::post) return method_not_allowed();
        service_.request_frame();
        return reply_json(http::status::accepted, {{"requested", true}});
      }
      if (path == "/frame/latest") {
        if (method != http::verb::get) return method_not_allowed();
        const auto frame = service_.latest_frame();
        if (!frame) return reply_json(http::status::service_unavailable, error_body("no_frame", "no frame rendered yet"));
        const bool ppm = query.find("format=ppm") != std::string_view::npos;
        Response res = ppm ? reply(http::status::ok, bytes(encode_ppm(frame->frame)), "image/x-portable-pixmap")
                           : reply(http::status::ok, bytes(frame->png), "image/png");
        res.set("X-Frame-Version", std::to_string(frame->render_version));
        res.set("X-Frame-Sequence", std::to_string(frame->sequence));
        res.set("X-State-Version", std::to_string(service_.snapshot()->version));
        res.set(http::field::cache_control, "no-store");
        return res;
      }
      if (static_dir_ && method == http::verb::get) return serve_static(path);
    } catch (const std::exception& e) {
      return reply_json(http::status::internal_server_error, error_body("internal", e.what()));
    }
    return reply_json(http::status::not_found, error_body("not_found", std::string(path)));
  }

  static std::string bytes(const std::vector<std::uint8_t>& v) { return {v.begin(), v.end()}; }

  Response method_not_allowed() {
    return reply_json(http::status::method_not_allowed, error_body("method_not_allowed", std::string(req_.method_string())));
  }

  Response serve_static(std::string_view path) {
    std::string rel(path.substr(1));
    if (rel.empty()) rel = "index.html";
    if (rel.find("..") != std::string::npos)
      return reply_json(http::status::bad_request, error_body("bad_path", rel));
    const auto full = *static_dir_ / rel;
    std::ifstream in(full, std::ios::binary);
    if (!in) return reply_json(http::status::not_found, error_body("not_found", rel));
    std::stringstream ss;
    ss << in.rdbuf();
    return reply(http::status::ok, ss.str(), mime_for(full));
  }

  beast::tcp_stream stream_;
  Service& service_;
  const std::optional<std::filesystem::path>& static_dir_;
  beast::flat_buffer buffer_;
  Request req_;
};

}  // namespace

struct HttpFrontend::Impl {
  Service& service;
  std::optional<std::filesystem::path> static_dir;
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  std::thread thread;

  explicit Impl(Service& s, std::optional<std::filesystem::path> dir) : service(s), static_dir(std::move(dir)) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpSession>(std::move(socket), service, static_dir)->run();
      accept();
    });
  }
};

HttpFrontend::HttpFrontend(Service& service, const std::string& address, std::uint16_t port,
                           std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service, std::move(static_dir))) {
  beast::error_code ec;
  const auto addr = asio::ip::make_address(address, ec);
  if (ec) throw std::runtime_error("invalid bind address '" + address + "'");
  const tcp::endpoint ep{addr, port};
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw std::runtime_error("cannot bind HTTP port " + std::to_string(port) + ": " + ec.message());
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

HttpFrontend::~HttpFrontend() { stop(); }

std::uint16_t HttpFrontend::port() const { return impl_->acceptor.local_endpoint().port(); }

void HttpFrontend::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->io.stop();
  impl_->thread.join();
}

}  // namespace peakray
