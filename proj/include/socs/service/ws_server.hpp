#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "socs/service/telemetry.hpp"

namespace socs::service {

// Splits "host:port"; throws Error(InvalidConfig).
std::pair<std::string, unsigned short> parse_listen(std::string_view listen);

// WebSocket endpoint for the console. Every message is one JSON object
// terminated by a newline. Server to client messages come from the hub;
// client messages go to `on_message`, which returns an error text to send
// back to that client alone, or nothing on success.
class WebSocketServer {
 public:
  using Handler = std::function<std::optional<std::string>(std::string_view)>;

  WebSocketServer(TelemetryHub& hub, Handler on_message);
  ~WebSocketServer();

  // Binds and starts serving on a background thread. Throws Error(Io).
  void start(const std::string& listen);
  void stop();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace socs::service
