#pragma once

// JSON persistence: model weights, attack results, metrics reports, priority
// maps, and run manifests. Documents the on-disk schemas next to the code
// that reads them.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "greedypixel/attack.hpp"
#include "greedypixel/image_io.hpp"
#include "greedypixel/metrics.hpp"
#include "greedypixel/nets.hpp"
#include "greedypixel/oracle.hpp"
#include "greedypixel/priority_map.hpp"

namespace greedypixel {

using Json = nlohmann::json;

// ---- model weights ----------------------------------------------------------
// { "arch": "linear"|"tinyconv", "k", "c", "h", "w", "filters"?, "seed",
//   "weights": { name: [numbers] } }
// Weight entries: linear uses W (K x C*H*W row-major) and b (K);
// tinyconv uses conv_w (F x C x 3 x 3), conv_b (F), fc_w (K x F), fc_b (K).

inline Json model_to_json(const LinearNet& m) {
  const Shape s = m.input_shape();
  return Json{{"arch", "linear"},
              {"k", m.class_count()},
              {"c", s.c},
              {"h", s.h},
              {"w", s.w},
              {"seed", m.seed()},
              {"weights", Json{{"W", m.weights()}, {"b", m.bias()}}}};
}

inline Json model_to_json(const TinyConvNet& m) {
  const Shape s = m.input_shape();
  return Json{{"arch", "tinyconv"},
              {"k", m.class_count()},
              {"c", s.c},
              {"h", s.h},
              {"w", s.w},
              {"filters", m.filters()},
              {"seed", m.seed()},
              {"weights", Json{{"conv_w", m.conv_weights()},
                               {"conv_b", m.conv_bias()},
                               {"fc_w", m.fc_weights()},
                               {"fc_b", m.fc_bias()}}}};
}

inline Json model_to_json(const Model& m) {
  if (auto* lin = dynamic_cast<const LinearNet*>(&m)) return model_to_json(*lin);
  if (auto* conv = dynamic_cast<const TinyConvNet*>(&m)) return model_to_json(*conv);
  throw ModelError("model type has no JSON serialization");
}

namespace detail {

inline std::vector<double> weight_entry(const Json& weights, const std::string& name,
                                        std::size_t expected) {
  if (!weights.contains(name) || !weights[name].is_array()) {
    throw FormatError("weights entry '" + name + "' missing or not an array");
  }
  std::vector<double> v = weights[name].get<std::vector<double>>();
  if (v.size() != expected) {
    throw FormatError("weights entry '" + name + "' has " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(expected));
  }
  return v;
}

inline int int_field(const Json& j, const std::string& name) {
  if (!j.contains(name) || !j[name].is_number_integer()) {
    throw FormatError("field '" + name + "' missing or not an integer");
  }
  return j[name].get<int>();
}

}  // namespace detail

inline std::unique_ptr<Model> model_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("model document is not a JSON object");
  if (!j.contains("arch") || !j["arch"].is_string()) {
    throw FormatError("model document lacks an 'arch' string");
  }
  const std::string arch = j["arch"].get<std::string>();
  const int k = detail::int_field(j, "k");
  const Shape shape{detail::int_field(j, "c"), detail::int_field(j, "h"),
                    detail::int_field(j, "w")};
  if (shape.c < 1 || shape.h < 1 || shape.w < 1 || k < 2) {
    throw FormatError("model dimensions out of range");
  }
  const std::uint64_t seed =
      j.contains("seed") ? j["seed"].get<std::uint64_t>() : 0;
  if (!j.contains("weights") || !j["weights"].is_object()) {
    throw FormatError("model document lacks a 'weights' object");
  }
  const Json& w = j["weights"];
  const std::size_t n = shape.volume();
  if (arch == "linear") {
    return std::make_unique<LinearNet>(
        k, shape, seed, detail::weight_entry(w, "W", static_cast<std::size_t>(k) * n),
        detail::weight_entry(w, "b", k));
  }
  if (arch == "tinyconv") {
    const int f = detail::int_field(j, "filters");
    if (f < 1) throw FormatError("tinyconv filter count out of range");
    return std::make_unique<TinyConvNet>(
        k, shape, f, seed,
        detail::weight_entry(w, "conv_w", static_cast<std::size_t>(f) * shape.c * 9),
        detail::weight_entry(w, "conv_b", f),
        detail::weight_entry(w, "fc_w", static_cast<std::size_t>(k) * f),
        detail::weight_entry(w, "fc_b", k));
  }
  throw FormatError("unknown arch '" + arch + "'");
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw FormatError("short write to " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_model(const Model& m, const std::string& path) {
  write_text_file(path, model_to_json(m).dump(2) + "\n");
}

inline std::unique_ptr<Model> load_model(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw FormatError("model file " + path + " is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

// ---- attack results ---------------------------------------------------------
// { success, pixel_steps, queries_used, setup_queries, modified_pixels,
//   final_loss, loss_trace[], linf, config{} }

inline Json attack_config_to_json(const AttackConfig& c, int label) {
  return Json{{"epsilon", c.epsilon},
              {"max_queries", c.max_queries},
              {"refresh", c.refresh_period},  // 0 means disabled
              {"threat", threat_name(c.threat)},
              {"map_source", c.map_source == MapSource::Gradient ? "gradient" : "random"},
              {"seed", c.seed},
              {"label", label}};
}

inline Json attack_result_to_json(const AttackResult& r, const AttackConfig& cfg,
                                  int label, double linf) {
  return Json{{"success", r.success},
              {"pixel_steps", r.pixel_steps},
              {"queries_used", r.queries_used},
              {"setup_queries", r.setup_queries},
              {"modified_pixels", r.modified_pixels},
              {"final_loss", r.final_loss},
              {"loss_trace", r.loss_trace},
              {"linf", linf},
              {"converged", r.converged},
              {"config", attack_config_to_json(cfg, label)}};
}

// ---- metrics reports --------------------------------------------------------

inline Json metrics_report_to_json(const MetricsReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json row{{"id", s.id},
             {"success", s.success},
             {"queries", s.queries},
             {"l0", s.l0},
             {"linf", s.linf}};
    if (s.has_ssim) row["ssim"] = s.ssim;
    samples.push_back(row);
  }
  return Json{{"asr", r.asr},
              {"mean_queries", r.mean_queries},
              {"mean_ssim", r.mean_ssim},
              {"mean_l0", r.mean_l0},
              {"mean_linf", r.mean_linf},
              {"samples", samples}};
}

// ---- priority maps ----------------------------------------------------------

inline Json priority_map_to_json(const PriorityMap& map) {
  Json order = Json::array();
  for (const PixelCoord& p : map.order) order.push_back(Json::array({p.h, p.w}));
  return Json{{"source", map.source == MapSource::Gradient ? "gradient" : "random"},
              {"generated_at_step", map.generated_at_step},
              {"order", order}};
}

// Saliency rendered as an 8-bit heatmap, linearly normalized to [0,255];
// an all-equal field renders as black.
inline Tensor saliency_heatmap(const std::vector<double>& gprime, int h, int w) {
  if (gprime.size() != static_cast<std::size_t>(h) * w) {
    throw DimensionError("saliency length does not match H*W");
  }
  double lo = gprime[0], hi = gprime[0];
  for (double v : gprime) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor img(Shape{1, h, w});
  if (hi > lo) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        img.at(0, i, j) = (gprime[static_cast<std::size_t>(i) * w + j] - lo) / (hi - lo);
      }
    }
  }
  return img;
}

// ---- oracle gap reports -----------------------------------------------------

inline Json gap_report_to_json(double global_loss, double greedy_loss, bool is_coord_min,
                               std::uint64_t states_visited) {
  return Json{{"global_loss", global_loss},
              {"greedy_loss", greedy_loss},
              {"gap", greedy_loss - global_loss},
              {"is_coordinate_min", is_coord_min},
              {"states_visited", states_visited}};
}

// ---- run manifests ----------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

inline std::string file_checksum(const std::string& path) {
  return hex64(fnv1a64(read_text_file(path)));
}

struct RunManifest {
  std::string command;
  Json config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, checksum
  std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
  std::uint64_t seed = 0;
  double duration_ms = 0.0;

  void add_input(const std::string& path) { inputs.emplace_back(path, file_checksum(path)); }
  void add_output(const std::string& path) { outputs.emplace_back(path, file_checksum(path)); }
};

inline Json manifest_to_json(const RunManifest& m) {
  auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
    Json out = Json::array();
    for (const auto& [path, sum] : v) out.push_back(Json{{"path", path}, {"fnv1a64", sum}});
    return out;
  };
  return Json{{"command", m.command},
              {"config", m.config},
              {"inputs", files(m.inputs)},
              {"outputs", files(m.outputs)},
              {"seed", m.seed},
              {"duration_ms", m.duration_ms}};
}

}  // namespace greedypixel
