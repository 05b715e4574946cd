#pragma once

// HTTP server side of the wire protocol: exposes any local Model at
// /v1/info and /v1/logits. Used by the `serve` subcommand and by loopback
// tests that attack a model through the network stack.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"

namespace greedypixel {

class ModelServer {
 public:
  explicit ModelServer(const Model& model) : model_(model) {
    server_.Get("/v1/info", [this](const httplib::Request&, httplib::Response& res) {
      const Shape s = model_.input_shape();
      res.set_content(nlohmann::json{{"k", model_.class_count()},
                                     {"c", s.c},
                                     {"h", s.h},
                                     {"w", s.w}}
                          .dump(),
                      "application/json");
    });
    server_.Post("/v1/logits", [this](const httplib::Request& req, httplib::Response& res) {
      handle_logits(req, res);
    });
  }

  ~ModelServer() { stop(); }

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
      if (bound < 0) throw TransportError("cannot bind " + host);
    } else if (!server_.bind_to_port(host, port)) {
      throw TransportError("cannot bind " + host + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  // Serves on the calling thread until stop() is invoked elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) {
      throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
    }
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::uint64_t requests() const { return requests_.load(); }
  std::uint64_t images_served() const { return images_.load(); }

 private:
  void handle_logits(const httplib::Request& req, httplib::Response& res) {
    requests_.fetch_add(1, std::memory_order_relaxed);
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      return fail(res, 400, std::string("body is not valid JSON: ") + e.what());
    }
    try {
      const Shape want = model_.input_shape();
      const auto& shape = body.at("shape");
      if (!shape.is_array() || shape.size() != 3 || Shape{shape[0].get<int>(),
          shape[1].get<int>(), shape[2].get<int>()} != want) {
        return fail(res, 400, "shape does not match served model " + want.str());
      }
      nlohmann::json logits;
      if (body.contains("images")) {
        std::vector<Image> xs;
        for (const auto& row : body.at("images")) {
          xs.emplace_back(want, row.get<std::vector<double>>());
        }
        logits = nlohmann::json::array();
        for (const auto& out : model_.logits_batch(xs)) logits.push_back(out);
        images_.fetch_add(xs.size(), std::memory_order_relaxed);
      } else {
        logits = model_.logits(Image(want, body.at("image").get<std::vector<double>>()));
        images_.fetch_add(1, std::memory_order_relaxed);
      }
      res.set_content(nlohmann::json{{"logits", std::move(logits)}}.dump(),
                      "application/json");
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, std::string("malformed request: ") + e.what());
    } catch (const Error& e) {
      fail(res, 400, e.what());
    }
  }

  static void fail(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
  }

  const Model& model_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> images_{0};
};

}  // namespace greedypixel
