#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "facework/annotation.hpp"

namespace facework {

// HTTP front end for AnnotationService. Every response body is JSON;
// failures carry {"error": message}.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service, std::filesystem::path static_dir = {})
      : service_(service) {
    routes();
    if (!static_dir.empty() && !server_.set_mount_point("/", static_dir.string())) {
      throw DataError("static directory not found: " + static_dir.string());
    }
  }

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  // Blocks until stop().
  void serve() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  using Handler = std::function<nlohmann::json(const httplib::Request&)>;

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static httplib::Server::Handler wrap(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, 200, h(req));
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
      } catch (const ValidationError& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const NotFound& e) {
        reply(res, 404, {{"error", e.what()}});
      } catch (const NoOverlapError& e) {
        reply(res, 422, {{"error", e.what()}});
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        reply(res, 500, {{"error", e.what()}});
      }
    };
  }

  void routes() {
    server_.Get("/api/tasks", wrap([this](const httplib::Request& req) {
                  return service_.tasks(req.get_param_value("annotator"));
                }));
    server_.Get(R"(/api/conversations/([^/]+))", wrap([this](const httplib::Request& req) {
                  return service_.conversation(req.matches[1], req.get_param_value("annotator"));
                }));
    server_.Post("/api/labels", wrap([this](const httplib::Request& req) {
                   return service_.submit(nlohmann::json::parse(req.body));
                 }));
    server_.Get("/api/agreement", wrap([this](const httplib::Request& req) {
                  return service_.agreement_json(req.get_param_value("a"), req.get_param_value("b"));
                }));
    server_.Get("/api/labelset", wrap([](const httplib::Request&) { return AnnotationService::labelset(); }));
  }

  AnnotationService& service_;
  httplib::Server server_;
};

}  // namespace facework
