#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"
#include "aeos/geometry/ply.hpp"
#include "aeos/harness/benchmark.hpp"
#include "aeos/harness/plots.hpp"
#include "doctest.h"

using namespace aeos;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("aeos_test_harness_" + name);
  fs::remove_all(d);
  return d;
}

AppConfig short_config() {
  AppConfig c = parse_config(
      "[scene]\ntunnel_length = 60.0\n"
      "[benchmark]\nepisode_seconds = 2.0\nseeds = 1\nthreads = 2\n");
  return c;
}

EpisodeLog run_short(const std::string& controller, std::uint64_t seed, const AppConfig& cfg,
                     double seconds = 2.0) {
  const auto scene = resolve_scene("tunnel", cfg);
  const ControllerSpec spec = ControllerSpec::parse(controller);
  auto learned = spec.learned() ? load_learned_cost("", cfg) : nullptr;
  auto ctrl = make_controller(spec, cfg, learned);
  EpisodeOptions opts;
  opts.duration = seconds;
  return run_episode(scene, "tunnel", spec, *ctrl, seed, cfg, opts);
}

}  // namespace

TEST_CASE("empty configuration equals the defaults and the shipped default file") {
  const AppConfig empty = parse_config("");
  CHECK(parse_config(default_config_text()).env.dt == empty.env.dt);
  const fs::path shipped = fs::path(AEOS_SOURCE_DIR) / "configs" / "default.toml";
  REQUIRE(fs::exists(shipped));
  CHECK(slurp(shipped) == default_config_text());
  const AppConfig loaded = load_config(shipped);
  CHECK(loaded.policy.mpc.horizon == 10);
  CHECK(loaded.policy.mpc.rho == doctest::Approx(0.05));
  CHECK(loaded.env.scanner.omega_max == doctest::Approx(8.0));
  CHECK(loaded.train.total_steps == 500000);
  CHECK(loaded.benchmark.controllers.size() == 6);
}

TEST_CASE("configuration values reach every module") {
  const AppConfig c = parse_config(
      "# comment\n[mpc]\nhorizon = 6   # trailing comment\nrho = 0.2\nsolver = \"fixed-point\"\n"
      "[scanner]\nomega_max = 4.0\n[costnet]\npano_width = 40\npano_height = 20\n"
      "[benchmark]\nscenes = [\"room\", \"forest\"]\n[train]\nobjective = \"critic\"\n");
  CHECK(c.policy.mpc.horizon == 6);
  CHECK(c.net.horizon == 6);
  CHECK(c.policy.mpc.rho == doctest::Approx(0.2));
  CHECK(c.policy.mpc.solver == MpcSolver::kFixedPoint);
  CHECK(c.policy.mpc.omega_max == doctest::Approx(4.0));
  CHECK(c.env.policy_pano_width == 40);
  CHECK(c.env.policy_pano_height == 20);
  CHECK(c.benchmark.scenes == std::vector<std::string>{"room", "forest"});
  CHECK(c.train.ppo.objective == ActorObjective::kCriticAscent);
}

TEST_CASE("configuration errors name the line") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("[nope]\n").find("line 1") != std::string::npos);
  CHECK(message("[mpc]\nhorizonn = 3\n").find("line 2") != std::string::npos);
  CHECK(message("[mpc]\nhorizon = abc\n").find("line 2") != std::string::npos);
  CHECK(message("[mpc]\nhorizon 3\n").find("line 2") != std::string::npos);
  CHECK(message("[mpc]\nhorizon = 0\n") != "no error");
  CHECK(message("[mpc]\nsolver = \"newton\"\n") != "no error");
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), Error);
}

TEST_CASE("controller names") {
  CHECK(ControllerSpec::parse("fixed-slow").rate == 1.0);
  CHECK(ControllerSpec::parse("fixed-fast").rate == 8.0);
  CHECK(ControllerSpec::parse("fixed:2.5").rate == 2.5);
  CHECK(ControllerSpec::parse("mpc").kind == ControllerKind::kMpcOnly);
  CHECK(ControllerSpec::parse("aeos-nounc").learned());
  CHECK(ControllerSpec::parse("aeos").kind == ControllerKind::kAeos);
  CHECK_FALSE(ControllerSpec::parse("random").learned());
  CHECK_THROWS_AS(ControllerSpec::parse("pid"), ConfigError);
  CHECK_THROWS_AS(ControllerSpec::parse("fixed:x"), ConfigError);
  CHECK_THROWS_AS(make_controller(ControllerSpec::parse("aeos"), parse_config("")), ConfigError);
}

TEST_CASE("fixed-rate rotor angle is open-loop integration") {
  AppConfig cfg = short_config();
  cfg.env.scanner.delay_steps = 0;
  cfg.finalize();
  const EpisodeLog log = run_short("fixed-slow", 1, cfg, 10.0);
  REQUIRE(log.steps.size() == 100);
  const double t0 = log.steps.front().time - cfg.env.dt;
  for (const auto& s : log.steps) {
    CHECK(std::abs(wrap_pi(s.theta - (s.time - t0))) < 1e-9);
    CHECK(s.omega == 1.0);
  }

  AppConfig delayed = short_config();
  const EpisodeLog late = run_short("fixed-slow", 1, delayed, 1.0);
  for (const auto& s : late.steps) CHECK(std::abs(wrap_pi(s.theta - (s.time - t0 - delayed.env.dt))) < 1e-9);
}

TEST_CASE("random controller repeats its rate sequence for a seed") {
  const AppConfig cfg = short_config();
  const auto a = run_short("random", 4, cfg);
  const auto b = run_short("random", 4, cfg);
  const auto c = run_short("random", 5, cfg);
  std::vector<double> wa, wb, wc;
  for (const auto& s : a.steps) wa.push_back(s.omega_cmd);
  for (const auto& s : b.steps) wb.push_back(s.omega_cmd);
  for (const auto& s : c.steps) wc.push_back(s.omega_cmd);
  CHECK(wa == wb);
  CHECK(wa != wc);
  for (double w : wa) CHECK(std::abs(w) <= cfg.env.scanner.omega_max);
}

TEST_CASE("every controller sees the same ground-truth poses") {
  const AppConfig cfg = short_config();
  const auto fixed = run_short("fixed-fast", 2, cfg);
  for (const std::string name : {"random", "mpc", "aeos"}) {
    const auto other = run_short(name, 2, cfg);
    REQUIRE(other.steps.size() == fixed.steps.size());
    for (std::size_t i = 0; i < fixed.steps.size(); ++i) {
      CHECK(other.steps[i].time == fixed.steps[i].time);
      CHECK(other.steps[i].truth.translation() == fixed.steps[i].truth.translation());
    }
  }
}

TEST_CASE("episode log records controller diagnostics and round-trips through CSV") {
  const AppConfig cfg = short_config();
  const auto log = run_short("mpc", 3, cfg);
  REQUIRE(log.steps.size() == 20);
  for (const auto& s : log.steps) {
    CHECK(s.mpc_residual.has_value());
    CHECK(s.uncertainty_hash != 0);
  }
  CHECK(log.ape >= 0.0);
  CHECK_FALSE(log.failed);
  const fs::path dir = fresh_dir("episode");
  write_episode(dir / "ep", log);
  CHECK(fs::exists(dir / "ep_estimate.tum"));
  const EpisodeLog back = read_episode_csv(dir / "ep.csv");
  REQUIRE(back.steps.size() == log.steps.size());
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    CHECK(back.steps[i].theta == doctest::Approx(log.steps[i].theta).epsilon(1e-10));
    CHECK(back.steps[i].uncertainty_hash == log.steps[i].uncertainty_hash);
    CHECK(back.steps[i].status == log.steps[i].status);
  }
  fs::remove_all(dir);
}

TEST_CASE("scene names and file pairs resolve") {
  const AppConfig cfg = short_config();
  CHECK_THROWS_AS(resolve_scene("moon", cfg), ConfigError);
  const fs::path dir = fresh_dir("scene");
  fs::create_directories(dir);
  const auto gen = resolve_scene("tunnel", cfg);
  write_ply(dir / "t.ply", gen->map.points(), gen->map.normals(), PlyFormat::kBinaryLittleEndian);
  save_tum(dir / "t.tum", gen->trajectory);
  const auto loaded = resolve_scene((dir / "t.ply").string() + "+" + (dir / "t.tum").string(), cfg);
  CHECK(loaded->map.size() == gen->map.size());
  CHECK(loaded->trajectory.size() == gen->trajectory.size());
  CHECK_THROWS_AS(resolve_scene((dir / "missing.ply").string() + "+" + (dir / "t.tum").string(), cfg), IoError);
  fs::remove_all(dir);
}

TEST_CASE("percentiles interpolate between order statistics") {
  CHECK(percentile({3, 1, 2, 4}, 50) == doctest::Approx(2.5));
  CHECK(percentile({5}, 95) == 5);
  CHECK(percentile({0, 10}, 95) == doctest::Approx(9.5));
  CHECK_THROWS_AS(percentile({}, 50), InputError);
}

TEST_CASE("benchmark rows, tables and failures") {
  std::vector<BenchmarkRow> rows{{"tunnel", "a", 1, 0.2, 0.1, 0, 10, false},
                                 {"tunnel", "a", 2, 0.4, 0.3, 0, 10, false},
                                 {"tunnel", "b", 1, 0.1, 0.1, 8, 10, true},
                                 {"tunnel", "b", 2, 0.25, 0.2, 0, 10, false}};
  const auto cells = aggregate(rows);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].mean_ape == doctest::Approx(0.3));
  CHECK(cells[1].failed == 1);
  CHECK(cells[1].mean_ape == doctest::Approx(0.25));
  BenchmarkResult r;
  r.rows = rows;
  r.cells = cells;
  const std::string md = benchmark_markdown(r);
  CHECK(md.find("**0.2500**") != std::string::npos);
  CHECK(md.find("| b | **0.2500** | 1/2 |") != std::string::npos);
}

TEST_CASE("benchmark runs every cell and reruns are byte identical") {
  AppConfig cfg = short_config();
  cfg.benchmark.controllers = {"fixed-slow", "mpc"};
  cfg.finalize();
  const fs::path a = fresh_dir("bench_a"), b = fresh_dir("bench_b");
  const auto ra = run_benchmark(cfg, a);
  write_benchmark(a, ra, cfg);
  CHECK(ra.rows.size() == 2);
  CHECK(ra.rows[0].controller == "fixed-slow");
  CHECK(ra.rows[1].controller == "mpc");
  for (const auto& l : ra.latency) {
    CHECK(l.samples == 20);
    CHECK(l.p95_ms >= l.p50_ms);
  }
  const EpisodeLog direct = run_short("mpc", 1, cfg);
  CHECK(ra.rows[1].ape == direct.ape);

  cfg.benchmark.threads = 1;
  const auto rb = run_benchmark(cfg, b);
  write_benchmark(b, rb, cfg);
  for (const char* f : {"benchmark.csv", "benchmark_summary.csv"}) CHECK(slurp(a / f) == slurp(b / f));
  for (const auto& e : fs::directory_iterator(a / "episodes"))
    CHECK(slurp(e.path()) == slurp(b / "episodes" / e.path().filename()));
  CHECK(fs::exists(a / "latency.csv"));
  CHECK(fs::exists(a / "metrics.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("plots skip empty series and their CSVs are reproducible") {
  const AppConfig cfg = short_config();
  const auto log = run_short("fixed-fast", 1, cfg);
  const fs::path a = fresh_dir("plot_a"), b = fresh_dir("plot_b");
  const auto written = emit_plots({log}, a, {});
  CHECK(written == std::vector<std::string>{"rotor_angle", "rotor_speed", "trajectory", "ape"});
  emit_plots({log}, b, {});
  for (const auto& s : written) {
    CHECK(slurp(a / (s + ".csv")) == slurp(b / (s + ".csv")));
    CHECK(slurp(a / (s + ".svg")).rfind("<svg", 0) == 0);
  }
  std::ifstream angles(a / "rotor_angle.csv");
  std::string line;
  std::getline(angles, line);
  double max_angle = 0.0;
  while (std::getline(angles, line)) max_angle = std::max(max_angle, std::stod(line.substr(line.rfind(',') + 1)));
  CHECK(max_angle < 2 * pi);

  const fs::path u = fresh_dir("plot_u");
  emit_plots({log}, u, PlotOptions{true});
  std::ifstream unwrapped(u / "rotor_angle.csv");
  std::getline(unwrapped, line);
  double last = 0.0;
  while (std::getline(unwrapped, line)) last = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(last > 2 * pi);  // 8 rad/s for 2 s

  EpisodeLog empty;
  empty.controller = "none";
  const fs::path e = fresh_dir("plot_e");
  CHECK(emit_plots({empty}, e, {}).empty());
  CHECK_THROWS_AS(emit_plots({}, e, {}), InputError);
  CHECK(render_svg("t", "x", "y", {PlotSeries{"empty", {}, {}}}, {}).find("polyline") == std::string::npos);
  for (const auto& d : {a, b, u, e}) fs::remove_all(d);
}
