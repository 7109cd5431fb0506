#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "aeos/harness/episode.hpp"

namespace aeos {

struct BenchmarkRow {
  std::string scene;
  std::string controller;
  std::uint64_t seed = 0;
  double ape = 0.0;
  double mean_exploration = 0.0;
  int degenerate_steps = 0;
  int steps = 0;
  bool failed = false;
};

struct BenchmarkCell {
  std::string scene;
  std::string controller;
  int episodes = 0;
  int failed = 0;
  double mean_ape = 0.0;  // over successful episodes; NaN when none
  double mean_exploration = 0.0;
};

struct LatencyStats {
  std::string controller;
  std::size_t samples = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;  // scene, controller, seed order of the config
  std::vector<BenchmarkCell> cells;
  std::vector<LatencyStats> latency;
};

/// Linear-interpolated percentile, p in [0, 100]. Throws InputError on an
/// empty sample.
double percentile(std::vector<double> samples, double p);

LatencyStats latency_stats(const std::string& controller, const std::vector<double>& samples_ms);

/// Runs every (scene, controller, seed) cell of `config.benchmark`, cells in
/// parallel. Per-episode logs go to <out>/episodes/ when `out` is non-empty.
/// The same seed drives the scene noise for every controller, so all
/// controllers see the same trajectory. Throws ConfigError for bad names.
BenchmarkResult run_benchmark(const AppConfig& config, const std::filesystem::path& out,
                              const std::function<void(const BenchmarkRow&)>& on_row = {});

std::vector<BenchmarkCell> aggregate(const std::vector<BenchmarkRow>& rows);

/// benchmark.csv (per episode), benchmark_summary.csv (per cell),
/// latency.csv, benchmark.md and metrics.json. Only latency.csv and the
/// latency table depend on timing.
void write_benchmark(const std::filesystem::path& out, const BenchmarkResult& result,
                     const AppConfig& config);

/// Table of mean APE, controllers as rows and scenes as columns, the lowest
/// value per scene in bold.
std::string benchmark_markdown(const BenchmarkResult& result);

}  // namespace aeos
