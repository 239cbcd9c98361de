#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bohmwork/mixtures_estimators.hpp"

namespace bohmwork {

struct HistogramSeries {
  std::string label;
  Histogram histogram;
};

struct TrajectoryLine {
  std::size_t sample = 0;
  std::vector<double> t;
  std::vector<double> x;
};

/// Reads `bin_lo,bin_hi,mass`. Throws ValidationError on malformed rows.
Histogram read_histogram_csv(const std::filesystem::path& path);
/// Reads `sample,x0,t,x,E,W_partial` into one line per sample, in file order.
std::vector<TrajectoryLine> read_trajectories_csv(const std::filesystem::path& path);

/// Probability density outline of each series on shared axes. Throws ValidationError if
/// every series is empty.
std::string histogram_svg(const std::vector<HistogramSeries>& series, const std::string& title);
/// x(t) of the first `max_lines` trajectories.
std::string trajectories_svg(const std::vector<TrajectoryLine>& lines, const std::string& title,
                             std::size_t max_lines = 50);

/// Writes work_hist.svg from the work_hist*.csv files in `dir`, and trajectories.svg when
/// trajectories.csv exists. Returns the files written. Throws ValidationError when there is
/// no histogram or it is empty.
std::vector<std::filesystem::path> plot_results(const std::filesystem::path& dir);

}  // namespace bohmwork
