#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aeos/harness/episode.hpp"

namespace aeos {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  bool unwrap_angle = false;  // rotor angle as a continuous angle instead of mod 2π
  int width = 720;
  int height = 360;
};

/// One line chart; series with no points are skipped.
std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, const PlotOptions& options, bool equal_axes = false);

/// Long-format CSV: series,x,y.
void write_series_csv(const std::filesystem::path& path, const std::vector<PlotSeries>& series);

/// Running APE after each step (alignment as configured).
std::vector<double> ape_over_time(const EpisodeLog& log, const ApeOptions& options);

/// rotor_angle, rotor_speed, trajectory (top-down, truth plus each
/// estimate) and ape, each as .svg plus .csv. A figure with no data is not
/// written. Returns the written file stems. Throws InputError without logs.
std::vector<std::string> emit_plots(const std::vector<EpisodeLog>& logs, const std::filesystem::path& out,
                                    const PlotOptions& options, const ApeOptions& ape = {});

}  // namespace aeos
