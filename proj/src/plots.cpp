#include "bohmwork/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bohmwork/errors.hpp"

namespace bohmwork {

namespace {

constexpr double kWidth = 720.0, kHeight = 440.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
}

// Ticks at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (span / step <= 8.0) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return out;
}

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  double px(double x) const { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (hi > lo) return;
  const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
  lo -= pad;
  hi += pad;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& x_label, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<g stroke=\"black\" fill=\"none\">\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/>\n";
  for (double t : ticks(f.x_lo, f.x_hi)) {
    out << "<line x1=\"" << f.px(t) << "\" y1=\"" << y0 << "\" x2=\"" << f.px(t) << "\" y2=\"" << y0 + 5 << "\"/>\n";
  }
  for (double t : ticks(f.y_lo, f.y_hi)) {
    out << "<line x1=\"" << x0 - 5 << "\" y1=\"" << f.py(t) << "\" x2=\"" << x0 << "\" y2=\"" << f.py(t) << "\"/>\n";
  }
  out << "</g>\n";
  for (double t : ticks(f.x_lo, f.x_hi)) {
    out << "<text x=\"" << f.px(t) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  for (double t : ticks(f.y_lo, f.y_hi)) {
    out << "<text x=\"" << x0 - 8 << "\" y=\"" << f.py(t) + 4 << "\" text-anchor=\"end\">" << t << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (y0 + y1) / 2
      << ")\">" << y_label << "</text>\n";
}

}  // namespace

Histogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  Histogram h;
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || line != "bin_lo,bin_hi,mass") {
    throw ValidationError(path.string() + ": expected header bin_lo,bin_hi,mass");
  }
  ++n;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw ValidationError(path.string() + ":" + std::to_string(n) + ": expected 3 columns");
    const double lo = parse_number(cells[0], path, n), hi = parse_number(cells[1], path, n);
    if (h.edges.empty()) h.edges.push_back(lo);
    h.edges.push_back(hi);
    h.masses.push_back(parse_number(cells[2], path, n));
  }
  return h;
}

std::vector<TrajectoryLine> read_trajectories_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || line != "sample,x0,t,x,E,W_partial") {
    throw ValidationError(path.string() + ": expected header sample,x0,t,x,E,W_partial");
  }
  ++n;
  std::vector<TrajectoryLine> out;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw ValidationError(path.string() + ":" + std::to_string(n) + ": expected 6 columns");
    const auto sample = static_cast<std::size_t>(parse_number(cells[0], path, n));
    if (out.empty() || out.back().sample != sample) out.push_back({sample, {}, {}});
    out.back().t.push_back(parse_number(cells[2], path, n));
    out.back().x.push_back(parse_number(cells[3], path, n));
  }
  return out;
}

std::string histogram_svg(const std::vector<HistogramSeries>& series, const std::string& title) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_hi = 0.0;
  bool any = false;
  for (const auto& s : series) {
    const auto& h = s.histogram;
    double total = 0.0;
    for (double m : h.masses) total += m;
    if (h.masses.empty() || !(total > 0.0)) continue;
    any = true;
    x_lo = std::min(x_lo, h.edges.front());
    x_hi = std::max(x_hi, h.edges.back());
    for (std::size_t i = 0; i < h.masses.size(); ++i) {
      const double width = h.edges[i + 1] - h.edges[i];
      if (width > 0.0) y_hi = std::max(y_hi, h.masses[i] / width);
    }
  }
  if (!any) throw ValidationError("histogram is empty");
  widen(x_lo, x_hi);
  if (!(y_hi > 0.0)) y_hi = 1.0;
  const Frame f{x_lo, x_hi, 0.0, 1.05 * y_hi};

  std::ostringstream out;
  open_svg(out, title);
  axes(out, f, "W", "probability density");
  std::size_t color = 0;
  for (const auto& s : series) {
    const auto& h = s.histogram;
    if (h.masses.empty()) continue;
    out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kColors[color % std::size(kColors)] << "\" points=\"";
    out << f.px(h.edges.front()) << ',' << f.py(0.0);
    for (std::size_t i = 0; i < h.masses.size(); ++i) {
      const double width = h.edges[i + 1] - h.edges[i];
      // A zero-width bin (point mass) is drawn at full height.
      const double density = width > 0.0 ? h.masses[i] / width : y_hi;
      out << ' ' << f.px(h.edges[i]) << ',' << f.py(density) << ' ' << f.px(h.edges[i + 1]) << ',' << f.py(density);
    }
    out << ' ' << f.px(h.edges.back()) << ',' << f.py(0.0) << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 10 << "\" y=\"" << kTop + 16 + 16 * static_cast<double>(color)
        << "\" text-anchor=\"end\" fill=\"" << kColors[color % std::size(kColors)] << "\">" << s.label << "</text>\n";
    ++color;
  }
  out << "</svg>\n";
  return out.str();
}

std::string trajectories_svg(const std::vector<TrajectoryLine>& lines, const std::string& title, std::size_t max_lines) {
  const std::size_t n = std::min(lines.size(), max_lines);
  double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo, x_lo = t_lo, x_hi = -t_lo;
  for (std::size_t i = 0; i < n; ++i) {
    for (double t : lines[i].t) t_lo = std::min(t_lo, t), t_hi = std::max(t_hi, t);
    for (double x : lines[i].x) x_lo = std::min(x_lo, x), x_hi = std::max(x_hi, x);
  }
  if (n == 0) t_lo = x_lo = 0.0, t_hi = x_hi = 1.0;
  widen(t_lo, t_hi);
  widen(x_lo, x_hi);
  const double pad = 0.05 * (x_hi - x_lo);
  const Frame f{t_lo, t_hi, x_lo - pad, x_hi + pad};

  std::ostringstream out;
  open_svg(out, title);
  axes(out, f, "t", "x");
  for (std::size_t i = 0; i < n; ++i) {
    out << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << kColors[i % std::size(kColors)] << "\" points=\"";
    for (std::size_t k = 0; k < lines[i].t.size(); ++k) {
      if (k) out << ' ';
      out << f.px(lines[i].t[k]) << ',' << f.py(lines[i].x[k]);
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::filesystem::path> plot_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError(dir.string() + ": not a results directory");
  std::vector<HistogramSeries> series;
  for (const char* name : {"work_hist.csv", "work_hist_analytic.csv", "work_hist_numeric.csv"}) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) continue;
    std::string label = std::filesystem::path(name).stem().string();
    label = label == "work_hist" ? "work" : label.substr(std::string("work_hist_").size());
    series.push_back({label, read_histogram_csv(path)});
  }
  if (series.empty()) throw ValidationError(dir.string() + ": no work_hist*.csv");

  std::vector<std::filesystem::path> written;
  auto save = [&](const std::filesystem::path& path, const std::string& svg) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << svg;
    written.push_back(path);
  };
  save(dir / "work_hist.svg", histogram_svg(series, "Work distribution"));
  const auto traj = dir / "trajectories.csv";
  if (std::filesystem::exists(traj)) save(dir / "trajectories.svg", trajectories_svg(read_trajectories_csv(traj), "Trajectories"));
  return written;
}

}  // namespace bohmwork
