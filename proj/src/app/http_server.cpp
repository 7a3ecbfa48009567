#include <map>

#include "eegart/app/service.hpp"
#include "httplib.h"

namespace eegart::app {

struct HttpServer::Impl {
  ReviewService& service;
  httplib::Server server;
  std::mutex write_mu;  // annotation writes go through a single writer

  explicit Impl(ReviewService& s) : service(s) {}

  void respond(const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    Response r;
    if (req.method == "POST") {
      std::lock_guard lock(write_mu);
      r = service.handle(req.method, req.path, query, req.body);
    } else {
      r = service.handle(req.method, req.path, query, req.body);
    }
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }
};

HttpServer::HttpServer(ReviewService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& s = impl_->server;
  // SO_REUSEADDR only: with the library's default SO_REUSEPORT a second
  // instance would silently share the port instead of failing to bind.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->respond(req, res); };
  s.Get(R"(/.*)", handler);
  s.Post(R"(/.*)", handler);
  s.Put(R"(/.*)", handler);
  s.Delete(R"(/.*)", handler);
  // Local desk tool: the browser console may be served from another port.
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace eegart::app
