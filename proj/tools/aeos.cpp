#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "aeos/common/error.hpp"
#include "aeos/geometry/ply.hpp"
#include "aeos/harness/benchmark.hpp"
#include "aeos/harness/plots.hpp"

namespace fs = std::filesystem;
using namespace aeos;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kEpisodeFailure = 2;

struct Common {
  std::string config;
  std::string scene;
  std::string controller;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<long> steps;
};

void add_common(CLI::App* app, Common& c, bool scene, bool controller, bool steps) {
  app->add_option("--config", c.config, "Configuration file (TOML-style)")->check(CLI::ExistingFile);
  if (scene) app->add_option("--scene", c.scene, "tunnel | room | forest | <map.ply>+<trajectory.tum>");
  if (controller)
    app->add_option("--controller", c.controller,
                    "fixed-slow | fixed-fast | fixed:<rate> | random | mpc | aeos-nounc | aeos");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output directory");
  if (steps) app->add_option("--steps", c.steps, "Step budget");
}

AppConfig load(const Common& c) {
  AppConfig cfg = c.config.empty() ? parse_config("") : load_config(c.config);
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

int cmd_generate_scene(const Common& c) {
  AppConfig cfg = load(c);
  if (c.seed) cfg.scene_seed = *c.seed;
  const std::string name = c.scene.empty() ? "tunnel" : c.scene;
  const Scene scene = generate_synthetic_scene(parse_scene_kind(name), cfg.scene_seed, cfg.scene);
  const fs::path out = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(out);
  write_ply(out / (name + ".ply"), scene.map.points(), scene.map.normals(), PlyFormat::kBinaryLittleEndian);
  save_tum(out / (name + ".tum"), scene.trajectory);
  std::printf("%s: %zu points, %zu poses, %.1f s -> %s\n", name.c_str(), scene.map.size(),
              scene.trajectory.size(), scene.trajectory.duration(), out.string().c_str());
  return kOk;
}

int cmd_train(const Common& c, const std::string& resume) {
  AppConfig cfg = load(c);
  if (c.steps) cfg.train.total_steps = *c.steps;
  cfg.finalize();
  const std::string name = c.scene.empty() ? "room" : c.scene;
  const fs::path out = c.out.empty() ? fs::path("train_out") : fs::path(c.out);
  TrainSetup setup{cfg.env, cfg.net, cfg.policy, cfg.critic, cfg.train};
  Trainer trainer({resolve_scene(name, cfg)}, setup, c.seed.value_or(1), out);
  if (!resume.empty()) trainer.resume(resume);
  trainer.run();
  const auto& curve = trainer.curve();
  std::printf("trained %ld steps, %zu episodes", trainer.step(), trainer.episode_returns().size());
  if (!curve.empty() && curve.back().heldout_ape) std::printf(", held-out APE %.4f m", *curve.back().heldout_ape);
  std::printf("\ncheckpoint: %s\n", (out / "final").string().c_str());
  return kOk;
}

int cmd_run(const Common& c, const std::string& checkpoint, double duration, bool unwrap) {
  AppConfig cfg = load(c);
  if (!checkpoint.empty()) cfg.benchmark.checkpoint = checkpoint;
  cfg.finalize();
  const std::string name = c.scene.empty() ? "tunnel" : c.scene;
  const ControllerSpec spec = ControllerSpec::parse(c.controller.empty() ? "mpc" : c.controller);
  const auto scene = resolve_scene(name, cfg);
  const auto learned = spec.learned() ? load_learned_cost(cfg.benchmark.checkpoint, cfg) : nullptr;
  auto controller = make_controller(spec, cfg, learned);
  EpisodeOptions opts;
  opts.duration = duration > 0 ? duration : cfg.benchmark.episode_seconds;
  opts.start = cfg.benchmark.start_fraction * scene->trajectory.duration();
  if (c.steps) opts.max_steps = static_cast<int>(*c.steps);
  const std::uint64_t seed = c.seed.value_or(1);
  const EpisodeLog log = run_episode(scene, name, spec, *controller, seed, cfg, opts);

  const fs::path out = c.out.empty() ? fs::path("run_out") : fs::path(c.out);
  fs::create_directories(out);
  write_episode(out / "episode", log);
  emit_plots({log}, out / "plots", PlotOptions{unwrap}, cfg.ape);
  std::vector<double> lat;
  double total_return = 0.0;
  for (const auto& s : log.steps) {
    lat.push_back(s.latency_ms);
    total_return += s.reward.total;
  }
  const LatencyStats ls = latency_stats(spec.label(), lat);
  nlohmann::json j{{"scene", name},
                   {"controller", spec.label()},
                   {"seed", seed},
                   {"steps", log.steps.size()},
                   {"ape", log.ape},
                   {"ape_alignment", cfg.ape.align ? "rigid (rotation + translation, no scale)" : "none"},
                   {"mean_r_exp", log.mean_exploration},
                   {"return", total_return},
                   {"degenerate_steps", log.degenerate_steps},
                   {"failed", log.failed},
                   {"latency_ms", {{"p50", ls.p50_ms}, {"p95", ls.p95_ms}, {"mean", ls.mean_ms}}}};
  if (log.failed) j["failure"] = log.failure;
  write_json(out / "metrics.json", j);
  std::printf("%s on %s, seed %llu: %zu steps, APE %.4f m, latency p95 %.3f ms\n", spec.label().c_str(),
              name.c_str(), static_cast<unsigned long long>(seed), log.steps.size(), log.ape, ls.p95_ms);
  if (log.failed) {
    std::fprintf(stderr, "episode failed: %s\n", log.failure.c_str());
    return kEpisodeFailure;
  }
  return kOk;
}

int cmd_benchmark(const Common& c, const std::string& checkpoint, const std::vector<std::string>& controllers,
                  std::optional<int> seeds, std::optional<int> threads) {
  AppConfig cfg = load(c);
  if (!c.scene.empty()) cfg.benchmark.scenes = {c.scene};
  if (!c.controller.empty()) cfg.benchmark.controllers = {c.controller};
  if (!controllers.empty()) cfg.benchmark.controllers = controllers;
  if (c.seed) cfg.benchmark.first_seed = *c.seed;
  if (seeds) cfg.benchmark.seeds = *seeds;
  if (threads) cfg.benchmark.threads = *threads;
  if (c.steps) cfg.benchmark.episode_seconds = static_cast<double>(*c.steps) * cfg.env.dt;
  if (!checkpoint.empty()) cfg.benchmark.checkpoint = checkpoint;
  cfg.finalize();
  const fs::path out = c.out.empty() ? fs::path("benchmark_out") : fs::path(c.out);
  const BenchmarkResult result = run_benchmark(cfg, out, [](const BenchmarkRow& r) {
    std::printf("%-8s %-12s seed %-3llu APE %.4f%s\n", r.scene.c_str(), r.controller.c_str(),
                static_cast<unsigned long long>(r.seed), r.ape, r.failed ? "  FAILED" : "");
    std::fflush(stdout);
  });
  write_benchmark(out, result, cfg);
  std::printf("\n%s", benchmark_markdown(result).c_str());
  for (const auto& r : result.rows)
    if (r.failed) return kEpisodeFailure;
  return kOk;
}

int cmd_plot(const Common& c, const std::vector<std::string>& inputs, bool unwrap) {
  AppConfig cfg = load(c);
  std::vector<EpisodeLog> logs;
  for (const auto& in : inputs) {
    EpisodeLog log = read_episode_csv(in);
    log.scene = fs::path(in).stem().string();
    log.controller = log.scene;
    logs.push_back(std::move(log));
  }
  const fs::path out = c.out.empty() ? fs::path("plots") : fs::path(c.out);
  for (const auto& stem : emit_plots(logs, out, PlotOptions{unwrap}, cfg.ape))
    std::printf("%s\n", (out / (stem + ".svg")).string().c_str());
  return kOk;
}

int cmd_ape(const Common& c, const std::string& estimate, const std::string& truth, bool no_align) {
  AppConfig cfg = load(c);
  ApeOptions opts = cfg.ape;
  if (no_align) opts.align = false;
  const double ape = compute_ape(load_tum(estimate), load_tum(truth), opts);
  nlohmann::json j{{"ape", ape}, {"alignment", opts.align ? "rigid (rotation + translation, no scale)" : "none"}};
  std::printf("%s\n", j.dump().c_str());
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_json(fs::path(c.out) / "ape.json", j);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active scanning control for spinning lidar: simulation, training and evaluation"};
  app.require_subcommand(1);

  Common gen_c, train_c, run_c, bench_c, plot_c, ape_c;
  std::string train_resume, run_ckpt, bench_ckpt, ape_est, ape_truth;
  std::vector<std::string> bench_ctrls, plot_inputs;
  std::optional<int> bench_seeds, bench_threads;
  double run_duration = 0.0;
  bool run_unwrap = false, plot_unwrap = false, ape_no_align = false;

  auto* gen = app.add_subcommand("generate-scene", "Write a synthetic scene as PLY map plus TUM trajectory");
  add_common(gen, gen_c, true, false, false);

  auto* train = app.add_subcommand("train", "Train the learned cost with PPO");
  add_common(train, train_c, true, false, true);
  train->add_option("--resume", train_resume, "Checkpoint stem to resume from");

  auto* run = app.add_subcommand("run", "Run one closed-loop episode");
  add_common(run, run_c, true, true, true);
  run->add_option("--checkpoint", run_ckpt, "Policy checkpoint stem for aeos controllers");
  run->add_option("--duration", run_duration, "Episode length in seconds");
  run->add_flag("--unwrap", run_unwrap, "Plot the rotor angle unwrapped");

  auto* bench = app.add_subcommand("benchmark", "Run the scene x controller x seed matrix");
  add_common(bench, bench_c, true, true, true);
  bench->add_option("--controllers", bench_ctrls, "Controller list")->delimiter(',');
  bench->add_option("--seeds", bench_seeds, "Seeds per cell");
  bench->add_option("--threads", bench_threads, "Parallel cells (0: all cores)");
  bench->add_option("--checkpoint", bench_ckpt, "Policy checkpoint stem for aeos controllers");

  auto* plot = app.add_subcommand("plot", "Plot episode CSVs as SVG");
  add_common(plot, plot_c, false, false, false);
  plot->add_option("episodes", plot_inputs, "Episode CSV files")->required()->check(CLI::ExistingFile);
  plot->add_flag("--unwrap", plot_unwrap, "Rotor angle unwrapped instead of mod 2pi");

  auto* ape = app.add_subcommand("ape", "Absolute pose error between two TUM trajectories");
  add_common(ape, ape_c, false, false, false);
  ape->add_option("estimate", ape_est, "Estimated trajectory (TUM)")->required()->check(CLI::ExistingFile);
  ape->add_option("truth", ape_truth, "Ground-truth trajectory (TUM)")->required()->check(CLI::ExistingFile);
  ape->add_flag("--no-align", ape_no_align, "Skip rigid alignment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate_scene(gen_c);
    if (*train) return cmd_train(train_c, train_resume);
    if (*run) return cmd_run(run_c, run_ckpt, run_duration, run_unwrap);
    if (*bench) return cmd_benchmark(bench_c, bench_ckpt, bench_ctrls, bench_seeds, bench_threads);
    if (*plot) return cmd_plot(plot_c, plot_inputs, plot_unwrap);
    if (*ape) return cmd_ape(ape_c, ape_est, ape_truth, ape_no_align);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kEpisodeFailure;
  }
  return kOk;
}
