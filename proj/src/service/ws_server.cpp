#include "socs/service/ws_server.hpp"

#include <charconv>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "socs/error.hpp"

namespace socs::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::pair<std::string, unsigned short> parse_listen(std::string_view listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::InvalidConfig, "listen address needs host:port");
  auto host = std::string(listen.substr(0, colon));
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  if (host == "localhost") host = "127.0.0.1";
  const auto port_text = listen.substr(colon + 1);
  unsigned short port = 0;
  const auto r = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (host.empty() || r.ec != std::errc() || r.ptr != port_text.data() + port_text.size()) {
    throw Error(ErrorCode::InvalidConfig, "bad listen address '" + std::string(listen) + "'");
  }
  return {host, port};
}

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, TelemetryHub& hub, const WebSocketServer::Handler& handler)
      : ws_(std::move(socket)), hub_(hub), handler_(handler) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_open();
    });
  }

  void shutdown() {
    if (sub_) hub_.unsubscribe(sub_);
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void on_open() {
    auto weak = weak_from_this();
    auto executor = ws_.get_executor();
    sub_ = hub_.subscribe([weak, executor] {
      asio::post(executor, [weak] {
        if (auto self = weak.lock()) self->pump();
      });
    });
    read();
    pump();
  }

  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const auto text = beast::buffers_to_string(self->in_.data());
      self->in_.consume(self->in_.size());
      std::string_view rest = text;
      while (!rest.empty()) {
        const auto nl = rest.find('\n');
        const auto line = rest.substr(0, nl);
        rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        if (auto err = self->handler_(line)) self->direct_.push_back(std::move(*err));
      }
      self->pump();
      self->read();
    });
  }

  void pump() {
    if (writing_ || closing_) return;
    std::string msg;
    if (!direct_.empty()) {
      msg = std::move(direct_.front());
      direct_.pop_front();
    } else if (!sub_ || !sub_->try_pop(msg)) {
      if (sub_ && sub_->disconnected()) close();
      return;
    }
    out_ = std::move(msg);
    out_.push_back('\n');
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->finish();
      self->pump();
    });
  }

  void close() {
    closing_ = true;
    ws_.async_close(websocket::close_code::going_away,
                    [self = shared_from_this()](beast::error_code) { self->finish(); });
  }

  void finish() {
    if (sub_) {
      hub_.unsubscribe(sub_);
      sub_->close();
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  TelemetryHub& hub_;
  const WebSocketServer::Handler& handler_;
  std::shared_ptr<Subscriber> sub_;
  beast::flat_buffer in_;
  std::string out_;
  std::deque<std::string> direct_;
  bool writing_ = false;
  bool closing_ = false;
};

}  // namespace

struct WebSocketServer::Impl {
  Impl(TelemetryHub& h, Handler on_message) : hub(h), handler(std::move(on_message)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<Connection>(std::move(socket), hub, handler);
      connections.push_back(c);
      c->run();
      accept();
    });
  }

  TelemetryHub& hub;
  Handler handler;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::weak_ptr<Connection>> connections;
  std::thread thread;
  unsigned short port = 0;
};

WebSocketServer::WebSocketServer(TelemetryHub& hub, Handler on_message)
    : impl_(std::make_unique<Impl>(hub, std::move(on_message))) {}

WebSocketServer::~WebSocketServer() { stop(); }

void WebSocketServer::start(const std::string& listen) {
  const auto [host, port] = parse_listen(listen);
  try {
    const tcp::endpoint ep(asio::ip::make_address(host), port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    impl_->port = impl_->acceptor.local_endpoint().port();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, "cannot listen on " + listen + ": " + e.what());
  }
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WebSocketServer::stop() {
  if (!impl_->thread.joinable()) return;
  asio::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    for (auto& w : impl_->connections) {
      if (auto c = w.lock()) c->shutdown();
    }
    impl_->ioc.stop();
  });
  impl_->thread.join();
}

unsigned short WebSocketServer::port() const { return impl_->port; }

}  // namespace socs::service
