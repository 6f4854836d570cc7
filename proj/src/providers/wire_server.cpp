#include "finer/providers/wire_server.hpp"

#include <httplib.h>

namespace finer::providers {

using nlohmann::json;

WireServer::WireServer(std::shared_ptr<Backend> backend, json health)
    : backend_(std::move(backend)), health_(std::move(health)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

WireServer::~WireServer() { stop(); }

void WireServer::install_routes() {
  auto handler = [this](const std::string& route) {
    return [this, route](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", std::string("malformed JSON: ") + e.what()}}.dump(),
                        "application/json");
        return;
      }
      try {
        res.set_content(backend_->post(route, body).dump(), "application/json");
      } catch (const TransportError& e) {
        res.status = e.status() > 0 ? e.status() : 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  };
  server_->Post(kVqaRoute, handler(kVqaRoute));
  server_->Post(kChatRoute, handler(kChatRoute));
  server_->Post(kEmbedRoute, handler(kEmbedRoute));
  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_.dump(), "application/json");
  });
}

int WireServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("server", "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void WireServer::serve_forever(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error("server", "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void WireServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace finer::providers
