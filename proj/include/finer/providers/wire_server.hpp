#pragma once

#include <memory>
#include <string>
#include <thread>

#include "finer/providers/backend.hpp"

namespace httplib {
class Server;
}

namespace finer::providers {

// Serves a Backend over the HTTP wire contract (`/v1/vqa`, `/v1/chat`,
// `/v1/embed`, `GET /healthz`). Used to run the mock as a standalone service
// and to exercise HttpBackend end to end.
class WireServer {
 public:
  WireServer(std::shared_ptr<Backend> backend, nlohmann::json health);
  ~WireServer();

  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread.
  void serve_forever(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  std::shared_ptr<Backend> backend_;
  nlohmann::json health_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace finer::providers
