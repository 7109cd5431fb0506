#include "aeos/harness/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "aeos/common/error.hpp"

namespace aeos {
namespace fs = std::filesystem;

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) throw InputError("percentile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, samples.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return samples[lo] * (1.0 - f) + samples[hi] * f;
}

LatencyStats latency_stats(const std::string& controller, const std::vector<double>& samples_ms) {
  LatencyStats s;
  s.controller = controller;
  s.samples = samples_ms.size();
  if (samples_ms.empty()) return s;
  s.p50_ms = percentile(samples_ms, 50.0);
  s.p95_ms = percentile(samples_ms, 95.0);
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  return s;
}

std::vector<BenchmarkCell> aggregate(const std::vector<BenchmarkRow>& rows) {
  std::vector<BenchmarkCell> cells;
  for (const auto& r : rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const BenchmarkCell& c) {
      return c.scene == r.scene && c.controller == r.controller;
    });
    if (it == cells.end()) {
      cells.push_back({r.scene, r.controller, 0, 0, 0.0, 0.0});
      it = cells.end() - 1;
    }
    ++it->episodes;
    if (r.failed) {
      ++it->failed;
    } else {
      it->mean_ape += r.ape;
      it->mean_exploration += r.mean_exploration;
    }
  }
  for (auto& c : cells) {
    const int ok = c.episodes - c.failed;
    if (ok > 0) {
      c.mean_ape /= ok;
      c.mean_exploration /= ok;
    } else {
      c.mean_ape = std::nan("");
      c.mean_exploration = std::nan("");
    }
  }
  return cells;
}

BenchmarkResult run_benchmark(const AppConfig& config, const fs::path& out,
                              const std::function<void(const BenchmarkRow&)>& on_row) {
  const BenchmarkConfig& bc = config.benchmark;
  if (bc.seeds < 1) throw ConfigError("benchmark: seeds must be at least 1");
  if (bc.scenes.empty() || bc.controllers.empty()) throw ConfigError("benchmark: empty scene or controller list");

  std::vector<ControllerSpec> specs;
  bool any_learned = false;
  for (const auto& name : bc.controllers) {
    specs.push_back(ControllerSpec::parse(name));
    any_learned = any_learned || specs.back().learned();
  }
  std::vector<std::shared_ptr<const Scene>> scenes;
  for (const auto& name : bc.scenes) scenes.push_back(resolve_scene(name, config));
  const auto learned = any_learned ? load_learned_cost(bc.checkpoint, config) : nullptr;

  struct Job {
    std::size_t scene, controller;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenes.size(); ++s)
    for (std::size_t c = 0; c < specs.size(); ++c)
      for (int k = 0; k < bc.seeds; ++k) jobs.push_back({s, c, bc.first_seed + static_cast<std::uint64_t>(k)});

  std::vector<BenchmarkRow> rows(jobs.size());
  std::vector<std::vector<double>> latencies(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        auto controller = make_controller(specs[job.controller], config, learned);
        const Scene& scene = *scenes[job.scene];
        EpisodeOptions opts;
        opts.duration = bc.episode_seconds;
        opts.start = bc.start_fraction * scene.trajectory.duration();
        const EpisodeLog log = run_episode(scenes[job.scene], bc.scenes[job.scene], specs[job.controller],
                                           *controller, job.seed, config, opts);
        BenchmarkRow& row = rows[i];
        row = {bc.scenes[job.scene], bc.controllers[job.controller], job.seed, log.ape, log.mean_exploration,
               log.degenerate_steps, static_cast<int>(log.steps.size()), log.failed};
        latencies[i].reserve(log.steps.size());
        for (const auto& s : log.steps) latencies[i].push_back(s.latency_ms);
        if (!out.empty()) {
          std::string stem = row.scene + "_" + row.controller + "_s" + std::to_string(row.seed);
          std::replace_if(stem.begin(), stem.end(), [](char c) { return c == '/' || c == ':' || c == '+'; }, '-');
          write_episode(out / "episodes" / stem, log);
        }
        if (on_row) {
          std::lock_guard lock(report);
          on_row(row);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int threads = bc.threads > 0 ? bc.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!errors[i].empty()) throw Error("benchmark cell " + bc.scenes[jobs[i].scene] + "/" +
                                        bc.controllers[jobs[i].controller] + "/" +
                                        std::to_string(jobs[i].seed) + ": " + errors[i]);

  BenchmarkResult result;
  result.rows = std::move(rows);
  result.cells = aggregate(result.rows);
  for (std::size_t c = 0; c < specs.size(); ++c) {
    std::vector<double> all;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (jobs[i].controller == c) all.insert(all.end(), latencies[i].begin(), latencies[i].end());
    result.latency.push_back(latency_stats(bc.controllers[c], all));
  }
  return result;
}

namespace {

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

}  // namespace

std::string benchmark_markdown(const BenchmarkResult& result) {
  std::vector<std::string> scenes, controllers;
  for (const auto& c : result.cells) {
    if (std::find(scenes.begin(), scenes.end(), c.scene) == scenes.end()) scenes.push_back(c.scene);
    if (std::find(controllers.begin(), controllers.end(), c.controller) == controllers.end())
      controllers.push_back(c.controller);
  }
  auto cell = [&](const std::string& s, const std::string& c) -> const BenchmarkCell* {
    for (const auto& x : result.cells)
      if (x.scene == s && x.controller == c) return &x;
    return nullptr;
  };
  std::ostringstream md;
  md << "APE (m) per controller and scene, mean over successful episodes. Lower is better; bold is best.\n\n";
  md << "| Controller |";
  for (const auto& s : scenes) md << ' ' << s << " |";
  md << " Failed |\n|---|";
  for (std::size_t i = 0; i < scenes.size(); ++i) md << "---:|";
  md << "---:|\n";
  std::map<std::string, double> best;
  for (const auto& s : scenes) {
    double b = std::numeric_limits<double>::infinity();
    for (const auto& c : controllers)
      if (const auto* x = cell(s, c); x && std::isfinite(x->mean_ape)) b = std::min(b, x->mean_ape);
    best[s] = b;
  }
  for (const auto& c : controllers) {
    md << "| " << c << " |";
    int failed = 0, episodes = 0;
    for (const auto& s : scenes) {
      const auto* x = cell(s, c);
      if (!x) {
        md << " - |";
        continue;
      }
      failed += x->failed;
      episodes += x->episodes;
      const std::string v = fixed(x->mean_ape, 4);
      if (std::isfinite(x->mean_ape) && fixed(best[s], 4) == v) md << " **" << v << "** |";
      else md << ' ' << v << " |";
    }
    md << ' ' << failed << '/' << episodes << " |\n";
  }
  if (!result.latency.empty()) {
    md << "\nPer-step control latency (ms).\n\n| Controller | p50 | p95 | mean | samples |\n|---|---:|---:|---:|---:|\n";
    for (const auto& l : result.latency)
      md << "| " << l.controller << " | " << fixed(l.p50_ms, 4) << " | " << fixed(l.p95_ms, 4) << " | "
         << fixed(l.mean_ms, 4) << " | " << l.samples << " |\n";
  }
  return md.str();
}

void write_benchmark(const fs::path& out, const BenchmarkResult& result, const AppConfig& config) {
  fs::create_directories(out);
  {
    auto f = open_out(out / "benchmark.csv");
    f << "scene,controller,seed,ape,mean_r_exp,degenerate_steps,steps,failed\n";
    for (const auto& r : result.rows)
      f << r.scene << ',' << r.controller << ',' << r.seed << ',' << fixed(r.ape, 9) << ','
        << fixed(r.mean_exploration, 9) << ',' << r.degenerate_steps << ',' << r.steps << ','
        << (r.failed ? 1 : 0) << '\n';
  }
  {
    auto f = open_out(out / "benchmark_summary.csv");
    f << "scene,controller,episodes,failed,mean_ape,mean_r_exp\n";
    for (const auto& c : result.cells)
      f << c.scene << ',' << c.controller << ',' << c.episodes << ',' << c.failed << ',' << fixed(c.mean_ape, 9)
        << ',' << fixed(c.mean_exploration, 9) << '\n';
  }
  {
    auto f = open_out(out / "latency.csv");
    f << "controller,samples,p50_ms,p95_ms,mean_ms\n";
    for (const auto& l : result.latency)
      f << l.controller << ',' << l.samples << ',' << fixed(l.p50_ms, 6) << ',' << fixed(l.p95_ms, 6) << ','
        << fixed(l.mean_ms, 6) << '\n';
  }
  open_out(out / "benchmark.md") << benchmark_markdown(result);
  nlohmann::json j;
  j["ape_alignment"] = config.ape.align ? "rigid (rotation + translation, no scale)" : "none";
  j["ape_match_tolerance_s"] = config.ape.match_tolerance;
  j["episode_seconds"] = config.benchmark.episode_seconds;
  j["seeds"] = config.benchmark.seeds;
  j["first_seed"] = config.benchmark.first_seed;
  j["checkpoint"] = config.benchmark.checkpoint;
  for (const auto& c : result.cells) {
    nlohmann::json cj;
    cj["scene"] = c.scene;
    cj["controller"] = c.controller;
    cj["episodes"] = c.episodes;
    cj["failed"] = c.failed;
    cj["mean_ape"] = std::isfinite(c.mean_ape) ? nlohmann::json(c.mean_ape) : nlohmann::json();
    j["cells"].push_back(cj);
  }
  for (const auto& l : result.latency)
    j["latency_ms"][l.controller] = {{"p50", l.p50_ms}, {"p95", l.p95_ms}, {"mean", l.mean_ms}};
  open_out(out / "metrics.json") << j.dump(2) << '\n';
}

}  // namespace aeos
