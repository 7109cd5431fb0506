#include "aeos/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "aeos/common/error.hpp"

namespace aeos {
namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '<') r += "&lt;";
    else if (c == '>') r += "&gt;";
    else if (c == '&') r += "&amp;";
    else r += c;
  }
  return r;
}

std::string series_name(const EpisodeLog& log) {
  return log.controller.empty() ? log.scene : log.controller + " s" + std::to_string(log.seed);
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, const PlotOptions& options, bool equal_axes) {
  const double left = 64, right = 150, top = 32, bottom = 44;
  const double w = options.width, h = options.height;
  const double pw = w - left - right, ph = h - top - bottom;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  if (equal_axes) {
    const double scale = std::max((x1 - x0) / pw, (y1 - y0) / ph);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    x0 = cx - 0.5 * scale * pw, x1 = cx + 0.5 * scale * pw;
    y0 = cy - 0.5 * scale * ph, y1 = cy + 0.5 * scale * ph;
  }
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    svg << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(top + ph + 14) << "\" text-anchor=\"middle\">"
        << num(fx) << "</text>\n";
    svg << "<text x=\"" << num(left - 4) << "\" y=\"" << num(py(fy) + 4) << "\" text-anchor=\"end\">" << num(fy)
        << "</text>\n";
    svg << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << num(py(fy)) << "\" y2=\""
        << num(py(fy)) << "\" stroke=\"#ddd\"/>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\">" << escape(x_label)
      << "</text>\n";
  svg << "<text transform=\"translate(14," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
  int drawn = 0;
  for (const auto& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (n == 0) continue;
    const char* color = kPalette[drawn % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < n; ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) svg << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    svg << "\"/>\n";
    const double ly = top + 12 + 16 * drawn;
    svg << "<line x1=\"" << left + pw + 8 << "\" x2=\"" << left + pw + 24 << "\" y1=\"" << ly - 4 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 28 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    ++drawn;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_series_csv(const fs::path& path, const std::vector<PlotSeries>& series) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "series,x,y\n" << std::setprecision(12);
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) f << s.label << ',' << s.x[i] << ',' << s.y[i] << '\n';
}

std::vector<double> ape_over_time(const EpisodeLog& log, const ApeOptions& options) {
  std::vector<double> out;
  Trajectory est, truth;
  for (const auto& s : log.steps) {
    est.push_back(s.time, s.estimate);
    truth.push_back(s.time, s.truth);
    out.push_back(est.size() >= 3 ? compute_ape(est, truth, options)
                                  : (s.estimate.translation() - s.truth.translation()).norm());
  }
  return out;
}

std::vector<std::string> emit_plots(const std::vector<EpisodeLog>& logs, const fs::path& out,
                                    const PlotOptions& options, const ApeOptions& ape) {
  if (logs.empty()) throw InputError("plot: no episode logs");
  fs::create_directories(out);
  std::vector<PlotSeries> angle, speed, traj, error;
  bool truth_added = false;
  for (const auto& log : logs) {
    const std::string name = series_name(log);
    PlotSeries a{name, {}, {}}, w{name, {}, {}}, xy{name, {}, {}}, e{name, {}, {}};
    double unwrapped = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
      const auto& s = log.steps[i];
      double theta = s.theta;
      if (options.unwrap_angle) {
        if (i == 0) unwrapped = theta;
        else unwrapped += std::remainder(theta - prev, 2.0 * std::numbers::pi);
        prev = theta;
        theta = unwrapped;
      } else {
        theta = std::fmod(theta, 2.0 * std::numbers::pi);
        if (theta < 0) theta += 2.0 * std::numbers::pi;
      }
      a.x.push_back(s.time);
      a.y.push_back(theta);
      w.x.push_back(s.time);
      w.y.push_back(s.omega);
      xy.x.push_back(s.estimate.translation().x());
      xy.y.push_back(s.estimate.translation().y());
    }
    if (!truth_added && !log.steps.empty()) {
      PlotSeries t{"truth", {}, {}};
      for (const auto& s : log.steps) {
        t.x.push_back(s.truth.translation().x());
        t.y.push_back(s.truth.translation().y());
      }
      traj.push_back(std::move(t));
      truth_added = true;
    }
    if (!log.steps.empty()) {
      e.y = ape_over_time(log, ape);
      for (const auto& s : log.steps) e.x.push_back(s.time);
    }
    angle.push_back(std::move(a));
    speed.push_back(std::move(w));
    traj.push_back(std::move(xy));
    error.push_back(std::move(e));
  }
  std::vector<std::string> written;
  auto emit = [&](const std::string& stem, const std::string& title, const std::string& xl, const std::string& yl,
                  std::vector<PlotSeries>& series, bool equal) {
    std::erase_if(series, [](const PlotSeries& s) { return s.x.empty() || s.y.empty(); });
    if (series.empty()) return;
    write_series_csv(out / (stem + ".csv"), series);
    std::ofstream f(out / (stem + ".svg"));
    if (!f) throw IoError("cannot write " + (out / (stem + ".svg")).string());
    f << render_svg(title, xl, yl, series, options, equal);
    written.push_back(stem);
  };
  emit("rotor_angle", options.unwrap_angle ? "Rotor angle (unwrapped)" : "Rotor angle (mod 2π)", "time (s)",
       "angle (rad)", angle, false);
  emit("rotor_speed", "Rotor speed", "time (s)", "rate (rad/s)", speed, false);
  emit("trajectory", "Trajectory, top-down", "x (m)", "y (m)", traj, true);
  emit("ape", "APE over time", "time (s)", "APE (m)", error, false);
  return written;
}

}  // namespace aeos
