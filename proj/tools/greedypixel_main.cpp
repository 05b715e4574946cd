// greedypixel command line tool.
//
// Subcommands: attack, gen-model, oracle-compare, metrics, coverage-sim,
// priority-map, serve. Exit codes: 0 success, 2 usage/config/shape error,
// 3 attack finished without success (budget or convergence), 4 network
// failure after retries, 5 internal error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "greedypixel/greedypixel.hpp"

namespace gp = greedypixel;
namespace fs = std::filesystem;

namespace {

gp::Shape parse_shape(const std::string& text) {
  int c = 0, h = 0, w = 0;
  char x1 = 0, x2 = 0;
  std::istringstream ss(text);
  if (!(ss >> c >> x1 >> h >> x2 >> w) || x1 != 'x' || x2 != 'x' || !ss.eof() ||
      c < 1 || h < 1 || w < 1) {
    throw gp::ConfigError("bad --shape '" + text + "', want CxHxW like 3x16x16");
  }
  return gp::Shape{c, h, w};
}

std::uint64_t parse_refresh(const std::string& text) {
  if (text == "off") return 0;
  try {
    const long long v = std::stoll(text);
    if (v < 0) throw gp::ConfigError("--refresh must be 'off' or a non-negative integer");
    return static_cast<std::uint64_t>(v);
  } catch (const std::logic_error&) {
    throw gp::ConfigError("bad --refresh '" + text + "', want 'off' or an integer");
  }
}

struct TargetRef {
  bool remote = false;
  std::string value;  // weights path or base URL
};

TargetRef parse_target(const std::string& text) {
  if (text.rfind("file:", 0) == 0) return {false, text.substr(5)};
  if (text.rfind("url:", 0) == 0) return {true, text.substr(4)};
  throw gp::ConfigError("bad --target '" + text + "', want file:WEIGHTS.json or url:BASE");
}

// Loads a local model or connects a remote one.
std::unique_ptr<gp::Model> open_target(const TargetRef& ref) {
  if (!ref.remote) return gp::load_model(ref.value);
  gp::RemoteModelEndpoint ep;
  ep.base_url = ref.value;
  return std::make_unique<gp::RemoteModel>(ep);
}

std::unique_ptr<gp::Model> open_surrogate(const std::string& text, const gp::Model& target,
                                          std::uint64_t seed) {
  if (text.empty()) return nullptr;
  if (text == "random") {
    return std::make_unique<gp::LinearNet>(gp::LinearNet::random(
        target.class_count(), target.input_shape(), gp::SplitMix64::derive(seed, 1)));
  }
  if (text.rfind("file:", 0) == 0) return gp::load_model(text.substr(5));
  throw gp::ConfigError("bad --surrogate '" + text + "', want file:WEIGHTS.json or random");
}

gp::ThreatModel parse_threat(const std::string& text) {
  if (text == "wb") return gp::ThreatModel::WhiteBoxLimited;
  if (text == "bb") return gp::ThreatModel::BlackBoxLimited;
  if (text == "bb-unl") return gp::ThreatModel::BlackBoxUnlimited;
  throw gp::ConfigError("bad --threat '" + text + "', want wb, bb or bb-unl");
}

int cmd_attack(const std::string& image_path, int label, const std::string& target_text,
               const std::string& surrogate_text, double eps, bool eps_given,
               std::uint64_t max_queries, const std::string& refresh_text,
               const std::string& threat_text, const std::string& map_text,
               std::uint64_t seed, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  gp::AttackConfig cfg;
  cfg.threat = parse_threat(threat_text);
  if (cfg.threat == gp::ThreatModel::BlackBoxUnlimited) {
    if (eps_given && eps != 1.0) {
      throw gp::ConfigError("--threat bb-unl pins epsilon to 1.0; drop --eps or pass 1.0");
    }
    cfg.epsilon = 1.0;
  } else if (eps_given) {
    cfg.epsilon = eps;
  }
  cfg.max_queries = max_queries;
  cfg.refresh_period = parse_refresh(refresh_text);
  if (map_text == "random") cfg.map_source = gp::MapSource::Random;
  else if (map_text != "gradient") throw gp::ConfigError("bad --map, want gradient or random");
  cfg.seed = seed;

  const gp::Image x = gp::read_image(image_path);
  const TargetRef target_ref = parse_target(target_text);
  const std::unique_ptr<gp::Model> target = open_target(target_ref);
  const std::unique_ptr<gp::Model> surrogate = open_surrogate(surrogate_text, *target, seed);

  fs::create_directories(out_dir);
  gp::AttackEngine engine(*target, surrogate.get(), x, label, cfg);
  const gp::AttackResult result = engine.run();
  const gp::SparsityStats stats = gp::sparsity_stats(x, result.adversarial);

  const std::string adv_path =
      (fs::path(out_dir) / (x.channels() == 1 ? "adversarial.pgm" : "adversarial.ppm")).string();
  gp::write_image(result.adversarial, adv_path);

  std::string gray_path;
  if (x.channels() == 3) {
    gray_path = (fs::path(out_dir) / "delta_gray.pgm").string();
    gp::Tensor gray = gp::perturbation_grayscale(result.delta, -cfg.epsilon, cfg.epsilon);
    gp::write_image(gp::Image(gray.shape, std::move(gray.data)), gray_path);
  }

  const std::string result_path = (fs::path(out_dir) / "result.json").string();
  gp::write_text_file(result_path,
                      gp::attack_result_to_json(result, cfg, label, stats.linf).dump(2) + "\n");

  gp::RunManifest manifest;
  manifest.command = "attack";
  manifest.config = gp::attack_config_to_json(cfg, label);
  manifest.config["image"] = image_path;
  manifest.config["target"] = target_text;
  if (!surrogate_text.empty()) manifest.config["surrogate"] = surrogate_text;
  manifest.seed = seed;
  manifest.add_input(image_path);
  if (!target_ref.remote) manifest.add_input(target_ref.value);
  manifest.add_output(adv_path);
  if (!gray_path.empty()) manifest.add_output(gray_path);
  manifest.add_output(result_path);
  manifest.duration_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  gp::write_text_file((fs::path(out_dir) / "manifest.json").string(),
                      gp::manifest_to_json(manifest).dump(2) + "\n");

  std::cout << (result.success ? "success" : "no-success") << " loss=" << result.final_loss
            << " steps=" << result.pixel_steps << " queries=" << result.queries_used
            << " modified=" << result.modified_pixels << " linf=" << stats.linf << "\n";
  return result.success ? 0 : 3;
}

int cmd_gen_model(const std::string& arch, const std::string& task, const std::string& shape_text,
                  int k, int filters, std::uint64_t seed, const std::string& out_path) {
  const gp::Shape shape = parse_shape(shape_text);
  if (task == "dominant-channel") {
    if (arch != "linear") {
      throw gp::ConfigError("--task dominant-channel is defined for --arch linear only");
    }
    gp::save_model(gp::make_dominant_channel_model(shape, seed), out_path);
  } else if (task == "random") {
    if (arch == "linear") {
      gp::save_model(gp::LinearNet::random(k, shape, seed), out_path);
    } else if (arch == "tinyconv") {
      gp::save_model(gp::TinyConvNet::random(k, shape, filters, seed), out_path);
    } else {
      throw gp::ConfigError("bad --arch, want linear or tinyconv");
    }
  } else {
    throw gp::ConfigError("bad --task, want dominant-channel or random");
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_oracle_compare(const std::string& model_path, const std::string& image_path,
                       int label, double eps, std::uint64_t seed, int max_coords,
                       const std::string& out_path) {
  const std::unique_ptr<gp::Model> model = gp::load_model(model_path);
  gp::Image x;
  if (!image_path.empty()) {
    x = gp::read_image(image_path);
  } else {
    gp::SplitMix64 g(seed);
    std::vector<double> data(model->input_shape().volume());
    for (double& v : data) v = g.next_in(0.1, 0.9);
    x = gp::Image(model->input_shape(), std::move(data));
  }

  gp::AttackConfig cfg;
  cfg.epsilon = eps;
  cfg.seed = seed;
  cfg.early_stop = false;  // run to a coordinate-wise minimum, not first success
  cfg.threat = gp::ThreatModel::WhiteBoxLimited;
  const std::uint64_t pass =
      gp::one_pass_cost(x.channels(), x.height(), x.width());
  cfg.max_queries = pass * 64;

  const gp::AttackResult greedy = gp::run_attack(*model, nullptr, x, label, cfg);
  const gp::BruteForceResult brute =
      gp::brute_force_global(*model, x, label, cfg.epsilon, max_coords);
  const gp::CoordinateCheck check =
      gp::verify_coordinate_minimum(*model, x, greedy.delta, label, cfg.epsilon);

  const gp::Json report = gp::gap_report_to_json(brute.loss, greedy.final_loss,
                                                 check.is_minimum, brute.states_visited);
  const std::string text = report.dump(2) + "\n";
  if (!out_path.empty()) gp::write_text_file(out_path, text);
  std::cout << text;
  return 0;
}

int cmd_metrics(const std::vector<std::string>& result_paths,
                const std::vector<std::string>& pairs, const std::string& out_path) {
  std::vector<gp::SampleMetrics> samples;
  for (const std::string& path : result_paths) {
    gp::Json j;
    try {
      j = gp::Json::parse(gp::read_text_file(path));
    } catch (const gp::Json::parse_error& e) {
      throw gp::FormatError("result file " + path + " is not valid JSON: " + e.what());
    }
    gp::SampleMetrics m;
    m.id = fs::path(path).filename().string();
    try {
      m.success = j.at("success").get<bool>();
      m.queries = j.at("queries_used").get<std::uint64_t>();
      m.l0 = j.at("modified_pixels").get<std::uint64_t>();
      m.linf = j.at("linf").get<double>();
    } catch (const gp::Json::exception& e) {
      throw gp::FormatError("result file " + path + " lacks a required field: " + e.what());
    }
    samples.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string& spec = pairs[i];
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
      throw gp::ConfigError("bad --pair '" + spec + "', want CLEAN.ppm:ADV.ppm");
    }
    const double s = gp::ssim(gp::read_image(spec.substr(0, colon)),
                              gp::read_image(spec.substr(colon + 1)));
    if (i < samples.size()) {
      samples[i].ssim = s;
      samples[i].has_ssim = true;
    } else {
      gp::SampleMetrics m;
      m.id = spec;
      m.ssim = s;
      m.has_ssim = true;
      samples.push_back(std::move(m));
    }
  }
  const gp::MetricsReport report = gp::aggregate_metrics(samples);
  const std::string text = gp::metrics_report_to_json(report).dump(2) + "\n";
  if (!out_path.empty()) gp::write_text_file(out_path, text);
  std::cout << text;
  return 0;
}

int cmd_coverage_sim(std::uint64_t m, std::uint64_t trials, std::uint64_t seed) {
  const double expectation = gp::coverage_expectation(m);
  const double empirical = gp::coverage_simulation(m, trials, seed);
  std::cout << "M=" << m << " expectation=" << expectation << " empirical=" << empirical
            << " ratio=" << empirical / expectation << "\n";
  return 0;
}

int cmd_priority_map(const std::string& model_path, const std::string& image_path, int label,
                     const std::string& out_json, const std::string& out_heatmap) {
  const std::unique_ptr<gp::Model> model = gp::load_model(model_path);
  const gp::Image x = gp::read_image(image_path);
  const gp::Tensor grad = model->cw_loss_gradient(x, label);
  const gp::SaliencyField field = gp::SaliencyField::from_gradient(grad);
  const gp::PriorityMap map =
      gp::priority_map_from_saliency(field, x.height(), x.width());
  if (!out_json.empty()) {
    gp::write_text_file(out_json, gp::priority_map_to_json(map).dump(2) + "\n");
  }
  if (!out_heatmap.empty()) {
    gp::Tensor heat = gp::saliency_heatmap(field.gprime, x.height(), x.width());
    gp::write_image(gp::Image(heat.shape, std::move(heat.data)), out_heatmap);
  }
  std::cout << "pixels=" << map.size() << " first=(" << map.order[0].h << ","
            << map.order[0].w << ")\n";
  return 0;
}

int cmd_serve(const std::string& model_path, const std::string& host, int port) {
  const std::unique_ptr<gp::Model> model = gp::load_model(model_path);
  gp::ModelServer server(*model);
  std::cout << "serving " << model_path << " on " << host << ":" << port << "\n";
  server.run(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GreedyPixel: greedy per-pixel adversarial attack toolkit"};
  app.require_subcommand(1);

  // attack
  std::string a_image, a_target, a_surrogate, a_refresh = "off", a_threat = "bb";
  std::string a_map = "gradient", a_out;
  int a_label = 0;
  double a_eps = 4.0 / 255.0;
  std::uint64_t a_maxq = 20000, a_seed = 0;
  auto* attack = app.add_subcommand("attack", "Run the attack on one image");
  attack->add_option("--image", a_image, "Clean input image (PPM P6 or PGM P5)")->required();
  attack->add_option("--label", a_label, "True class index")->required();
  attack->add_option("--target", a_target, "file:WEIGHTS.json or url:BASE")->required();
  attack->add_option("--surrogate", a_surrogate, "file:WEIGHTS.json or random");
  auto* eps_opt = attack->add_option("--eps", a_eps, "Perturbation bound in (0,1]");
  attack->add_option("--max-queries", a_maxq, "Query budget");
  attack->add_option("--refresh", a_refresh, "Priority-map refresh period: off or steps");
  attack->add_option("--threat", a_threat, "wb, bb or bb-unl");
  attack->add_option("--map", a_map, "Pixel order source: gradient or random");
  attack->add_option("--seed", a_seed, "Seed for random maps and surrogates");
  attack->add_option("--out", a_out, "Output directory")->required();

  // gen-model
  std::string g_arch = "linear", g_task = "random", g_shape = "3x16x16", g_out;
  int g_k = 10, g_filters = 4;
  std::uint64_t g_seed = 0;
  auto* gen = app.add_subcommand("gen-model", "Write a seeded weights JSON");
  gen->add_option("--arch", g_arch, "linear or tinyconv");
  gen->add_option("--task", g_task, "random or dominant-channel");
  gen->add_option("--shape", g_shape, "Input shape CxHxW");
  gen->add_option("--k", g_k, "Class count (random task)");
  gen->add_option("--filters", g_filters, "Conv filters (tinyconv)");
  gen->add_option("--seed", g_seed, "Weight seed");
  gen->add_option("--out", g_out, "Output weights path")->required();

  // oracle-compare
  std::string o_model, o_image, o_out;
  int o_label = 0, o_cap = 16;
  double o_eps = 8.0 / 255.0;
  std::uint64_t o_seed = 0;
  auto* oracle = app.add_subcommand("oracle-compare",
                                    "Greedy vs exhaustive optimum on a tiny instance");
  oracle->add_option("--model", o_model, "Weights JSON")->required();
  oracle->add_option("--image", o_image, "Optional input image; seeded noise if absent");
  oracle->add_option("--label", o_label, "True class index");
  oracle->add_option("--eps", o_eps, "Perturbation bound");
  oracle->add_option("--seed", o_seed, "Seed for the generated input");
  oracle->add_option("--max-coords", o_cap, "Refuse instances above this many coordinates");
  oracle->add_option("--out", o_out, "Write the gap report here as well");

  // metrics
  std::vector<std::string> m_results, m_pairs;
  std::string m_out;
  auto* metrics = app.add_subcommand("metrics", "Aggregate result JSONs into a report");
  metrics->add_option("--results", m_results, "AttackResult JSON files")->expected(-1);
  metrics->add_option("--pair", m_pairs, "CLEAN:ADV image pair for SSIM")->expected(-1);
  metrics->add_option("--out", m_out, "Report output path");

  // coverage-sim
  std::uint64_t c_m = 64, c_trials = 10000, c_seed = 0;
  auto* coverage = app.add_subcommand("coverage-sim",
                                      "Random-order pixel coverage vs the exact expectation");
  coverage->add_option("--m", c_m, "Number of pixels");
  coverage->add_option("--trials", c_trials, "Simulation trials");
  coverage->add_option("--seed", c_seed, "Simulation seed");

  // priority-map
  std::string p_model, p_image, p_json, p_heatmap;
  int p_label = 0;
  auto* pmap = app.add_subcommand("priority-map", "Dump the pixel priority order");
  pmap->add_option("--model", p_model, "Weights JSON (needs gradients)")->required();
  pmap->add_option("--image", p_image, "Input image")->required();
  pmap->add_option("--label", p_label, "True class index");
  pmap->add_option("--out-json", p_json, "Priority order as JSON");
  pmap->add_option("--out-heatmap", p_heatmap, "Saliency heatmap as PGM");

  // serve
  std::string s_model, s_host = "127.0.0.1";
  int s_port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve a local model over the wire protocol");
  serve->add_option("--model", s_model, "Weights JSON")->required();
  serve->add_option("--host", s_host, "Bind address");
  serve->add_option("--port", s_port, "Bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (attack->parsed()) {
      return cmd_attack(a_image, a_label, a_target, a_surrogate, a_eps,
                        eps_opt->count() > 0, a_maxq, a_refresh, a_threat, a_map, a_seed,
                        a_out);
    }
    if (gen->parsed()) {
      return cmd_gen_model(g_arch, g_task, g_shape, g_k, g_filters, g_seed, g_out);
    }
    if (oracle->parsed()) {
      return cmd_oracle_compare(o_model, o_image, o_label, o_eps, o_seed, o_cap, o_out);
    }
    if (metrics->parsed()) return cmd_metrics(m_results, m_pairs, m_out);
    if (coverage->parsed()) return cmd_coverage_sim(c_m, c_trials, c_seed);
    if (pmap->parsed()) return cmd_priority_map(p_model, p_image, p_label, p_json, p_heatmap);
    if (serve->parsed()) return cmd_serve(s_model, s_host, s_port);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const gp::TransportError& e) {
    std::cerr << "network error: " << e.what() << "\n";
    return 4;
  } catch (const gp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 5;
  }
}
