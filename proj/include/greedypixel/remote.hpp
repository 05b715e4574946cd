#pragma once

// HTTP client side of the remote-model wire protocol. A remote model is a
// Model like any other; the attack engine cannot tell it apart from a local
// one. Protocol:
//   GET  {base}/v1/info   -> {"k":K,"c":C,"h":H,"w":W}
//   POST {base}/v1/logits   {"shape":[C,H,W],"image":[C*H*W floats]}
//                         -> {"logits":[K floats]}
// Batched form (optional): {"shape":[C,H,W],"images":[[...],[...]]}
//                         -> {"logits":[[K floats],...]}

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "greedypixel/image.hpp"
#include "greedypixel/model.hpp"

namespace greedypixel {

struct RemoteModelEndpoint {
  std::string base_url;      // e.g. http://127.0.0.1:8080
  int k = -1;                // class count; -1 = learn from /v1/info
  Shape shape{-1, -1, -1};   // expected input shape; -1 = learn from /v1/info
  double timeout_s = 5.0;
  int retries = 2;           // extra attempts after the first failure
  bool batch = true;         // use the batched request form in logits_batch
};

class RemoteModel final : public Model {
 public:
  explicit RemoteModel(RemoteModelEndpoint endpoint) : ep_(std::move(endpoint)) {
    if (ep_.k < 1 || ep_.shape.c < 1 || ep_.shape.h < 1 || ep_.shape.w < 1) {
      fetch_info();
    }
    if (ep_.k < 2) throw TransportError("endpoint advertises fewer than 2 classes");
  }

  int class_count() const override { return ep_.k; }
  Shape input_shape() const override { return ep_.shape; }

  std::vector<double> logits(const Image& x) const override {
    refuse_mismatch(x.shape());
    nlohmann::json body{{"shape", {ep_.shape.c, ep_.shape.h, ep_.shape.w}},
                        {"image", x.data()}};
    const nlohmann::json reply = post_logits(body);
    std::vector<double> out = parse_row(reply.at("logits"));
    count(1);
    return out;
  }

  std::vector<std::vector<double>> logits_batch(const std::vector<Image>& xs) const override {
    if (xs.empty()) return {};
    if (!ep_.batch) {
      std::vector<std::vector<double>> out;
      out.reserve(xs.size());
      for (const Image& x : xs) out.push_back(logits(x));
      return out;
    }
    for (const Image& x : xs) refuse_mismatch(x.shape());
    nlohmann::json images = nlohmann::json::array();
    for (const Image& x : xs) images.push_back(x.data());
    nlohmann::json body{{"shape", {ep_.shape.c, ep_.shape.h, ep_.shape.w}},
                        {"images", std::move(images)}};
    const nlohmann::json reply = post_logits(body);
    const nlohmann::json& rows = reply.at("logits");
    if (!rows.is_array() || rows.size() != xs.size()) {
      throw TransportError("batched reply row count does not match request");
    }
    std::vector<std::vector<double>> out;
    out.reserve(xs.size());
    for (const auto& row : rows) out.push_back(parse_row(row));
    count(xs.size());
    return out;
  }

  // Accounting: round trips and individual images that produced logits.
  // Failed attempts are never counted, so retries cannot inflate either.
  std::uint64_t http_requests() const { return requests_.load(); }
  std::uint64_t images_submitted() const { return images_.load(); }

 private:
  void refuse_mismatch(const Shape& s) const {
    if (!(s == ep_.shape)) {
      throw DimensionError("image shape " + s.str() +
                           " does not match endpoint shape " + ep_.shape.str() +
                           "; request refused before any network traffic");
    }
  }

  httplib::Client make_client() const {
    httplib::Client cli(ep_.base_url);
    const auto sec = static_cast<time_t>(ep_.timeout_s);
    const auto usec = static_cast<time_t>((ep_.timeout_s - sec) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    return cli;
  }

  void fetch_info() {
    const nlohmann::json info = with_retries([&](httplib::Client& cli) {
      auto res = cli.Get("/v1/info");
      return check_json(res, "/v1/info");
    });
    try {
      ep_.k = info.at("k").get<int>();
      ep_.shape = Shape{info.at("c").get<int>(), info.at("h").get<int>(),
                        info.at("w").get<int>()};
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed /v1/info reply: ") + e.what());
    }
  }

  nlohmann::json post_logits(const nlohmann::json& body) const {
    const std::string payload = body.dump();
    return with_retries([&](httplib::Client& cli) {
      auto res = cli.Post("/v1/logits", payload, "application/json");
      return check_json(res, "/v1/logits");
    });
  }

  static nlohmann::json check_json(const httplib::Result& res, const char* what) {
    if (!res) {
      throw TransportError(std::string(what) + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw TransportError(std::string(what) + ": HTTP " + std::to_string(res->status) +
                           (res->body.empty() ? "" : " " + res->body));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw TransportError(std::string(what) + ": reply is not valid JSON: " + e.what());
    }
  }

  template <typename Fn>
  nlohmann::json with_retries(Fn&& attempt) const {
    std::string last;
    for (int a = 0; a <= ep_.retries; ++a) {
      try {
        httplib::Client cli = make_client();
        return attempt(cli);
      } catch (const TransportError& e) {
        last = e.what();
      }
    }
    throw TransportError("all " + std::to_string(ep_.retries + 1) + " attempts failed; last: " + last);
  }

  std::vector<double> parse_row(const nlohmann::json& row) const {
    if (!row.is_array() || static_cast<int>(row.size()) != ep_.k) {
      throw TransportError("logits row has wrong length for advertised class count");
    }
    std::vector<double> out;
    out.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number()) throw TransportError("non-numeric logit in reply");
      out.push_back(v.get<double>());
    }
    return out;
  }

  void count(std::size_t images) const {
    requests_.fetch_add(1, std::memory_order_relaxed);
    images_.fetch_add(images, std::memory_order_relaxed);
  }

  RemoteModelEndpoint ep_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::atomic<std::uint64_t> images_{0};
};

}  // namespace greedypixel
