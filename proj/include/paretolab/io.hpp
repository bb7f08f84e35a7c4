#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "paretolab/config.hpp"
#include "paretolab/experiments.hpp"

namespace paretolab {

inline constexpr std::string_view kTimeseriesHeader =
    "step,omega,lambda,alpha_global,alpha_s,e_total,e_s,gini_global,gini_s";

/// Shortest decimal that round-trips to the same double ("nan", "inf" for
/// non-finite values).
std::string format_double(double x);

/// Writes `content` to a temporary sibling and renames it over `path`.
/// Throws IoError when the directory is missing or unwritable.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string timeseries_csv(const std::vector<TrajectoryPoint>& trajectory);
std::vector<TrajectoryPoint> parse_timeseries_csv(std::string_view text);
void write_timeseries(const ExperimentReport& report, const std::filesystem::path& path);
std::vector<TrajectoryPoint> read_timeseries(const std::filesystem::path& path);

/// Wall-clock facts kept out of the digest-covered part of the summary.
struct RunMeta {
  double wall_seconds = 0.0;
  std::string started_at;  // ISO 8601 UTC
  std::string version;
};

/// Summary JSON: resolved config, digest, seeds, verdicts, final fit,
/// metrics, per-replica results and warnings, plus `meta`. NaN is written as
/// null.
std::string summary_json(const ExperimentReport& report, const RunConfig& config,
                         const RunMeta& meta);
void write_summary(const ExperimentReport& report, const RunConfig& config, const RunMeta& meta,
                   const std::filesystem::path& path);

/// Sorted unique values with the empirical P(X >= x).
std::vector<std::pair<double, double>> ccdf(std::vector<double> samples);

/// Lower edges of `bins` log-spaced bins over [min, max] and densities
/// count / (n * width). A constant sample gets a tiny symmetric range.
std::vector<std::pair<double, double>> log_histogram(const std::vector<double>& samples,
                                                     std::size_t bins);

/// Writes ccdf.csv and histogram.csv into `dir`. Needs at least 2 samples,
/// all positive, and bins >= 2.
void emit_plot_data(const std::vector<double>& samples, std::size_t bins,
                    const std::filesystem::path& dir);

/// One value per line; the first line may be a non-numeric header, blank
/// lines are skipped and only the first comma-separated field is read.
std::vector<double> read_samples(const std::filesystem::path& path);

/// Files written by write_run_outputs, relative to the output directory.
struct OutputFiles {
  std::vector<std::filesystem::path> written;
};

/// Writes timeseries.csv, summary.json, ccdf.csv, histogram.csv and, for
/// exchange runs, network.edges. An empty trajectory adds a warning.
OutputFiles write_run_outputs(ExperimentReport& report, const RunConfig& config,
                              const RunMeta& meta, const std::filesystem::path& dir,
                              std::size_t bins = 30);

}  // namespace paretolab
