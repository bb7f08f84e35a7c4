#include "paretolab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "paretolab/errors.hpp"

namespace paretolab {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(std::string_view field, std::size_t line) {
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw DataError("line " + std::to_string(line) + ": not a number: \"" + std::string(field) +
                    "\"");
  }
  return x;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

std::string two_column_csv(std::string_view header,
                           const std::vector<std::pair<double, double>>& rows) {
  std::string out(header);
  out += '\n';
  for (const auto& [a, b] : rows) {
    out += format_double(a);
    out += ',';
    out += format_double(b);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string timeseries_csv(const std::vector<TrajectoryPoint>& trajectory) {
  std::string out(kTimeseriesHeader);
  out += '\n';
  for (const auto& p : trajectory) {
    out += std::to_string(p.step);
    for (double x : {p.omega, p.lambda, p.alpha_global, p.alpha_s, p.e_total, p.e_s,
                     p.gini_global, p.gini_s}) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

std::vector<TrajectoryPoint> parse_timeseries_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kTimeseriesHeader) {
    throw DataError("time series must start with the header " + std::string(kTimeseriesHeader));
  }
  std::vector<TrajectoryPoint> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 9) throw DataError("line " + std::to_string(i + 1) + ": expected 9 fields");
    TrajectoryPoint p;
    const auto res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), p.step);
    if (res.ec != std::errc{}) throw DataError("line " + std::to_string(i + 1) + ": bad step");
    double* cols[] = {&p.omega, &p.lambda, &p.alpha_global, &p.alpha_s,
                      &p.e_total, &p.e_s, &p.gini_global, &p.gini_s};
    for (std::size_t k = 0; k < 8; ++k) *cols[k] = parse_double(f[k + 1], i + 1);
    out.push_back(p);
  }
  return out;
}

void write_timeseries(const ExperimentReport& report, const fs::path& path) {
  write_atomic(path, timeseries_csv(report.trajectory));
}

std::vector<TrajectoryPoint> read_timeseries(const fs::path& path) {
  return parse_timeseries_csv(read_file(path));
}

std::string summary_json(const ExperimentReport& report, const RunConfig& config,
                         const RunMeta& meta) {
  ordered_json j;
  j["experiment"] = report.experiment;
  j["config_digest"] = report.config_digest;
  j["config"] = ordered_json::parse(to_json(config));
  j["seeds"] = report.seeds;
  j["burn_in"] = report.burn_in;
  j["trajectory_rows"] = report.trajectory.size();

  auto verdicts = ordered_json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back({{"name", v.name},
                        {"status", to_string(v.status)},
                        {"value", number(v.value)},
                        {"tolerance", number(v.tolerance)},
                        {"replicas", v.replicas},
                        {"passed", v.passed},
                        {"required", v.required},
                        {"note", v.note}});
  }
  j["verdicts"] = verdicts;

  if (report.final_fit) {
    const auto& f = *report.final_fit;
    j["final_fit"] = {{"alpha_hat", number(f.alpha_hat)},
                      {"x_min", number(f.x_min)},
                      {"std_error", number(f.std_error)},
                      {"ks_distance", number(f.ks_distance)},
                      {"ks_critical_1pct", number(ks_critical_value_1pct(f.n_tail))},
                      {"n_tail", f.n_tail}};
  } else {
    j["final_fit"] = nullptr;
  }
  if (report.bootstrap) {
    j["bootstrap"] = {{"lower", number(report.bootstrap->lower)},
                      {"upper", number(report.bootstrap->upper)},
                      {"resamples", report.bootstrap->resamples}};
  }

  auto metrics = ordered_json::object();
  for (const auto& [k, v] : report.metrics) metrics[k] = number(v);
  j["metrics"] = metrics;

  auto replicas = ordered_json::array();
  for (const auto& r : report.replicas) {
    auto m = ordered_json::object();
    for (const auto& [k, v] : r.metrics) m[k] = number(v);
    replicas.push_back({{"seed", r.seed}, {"metrics", m}});
  }
  j["replicas"] = replicas;
  j["warnings"] = report.warnings;
  j["meta"] = {{"wall_seconds", meta.wall_seconds},
               {"started_at", meta.started_at},
               {"version", meta.version}};
  return j.dump(2) + "\n";
}

void write_summary(const ExperimentReport& report, const RunConfig& config, const RunMeta& meta,
                   const fs::path& path) {
  write_atomic(path, summary_json(report, config, meta));
}

std::vector<std::pair<double, double>> ccdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || samples[i] != samples[i - 1]) {
      out.emplace_back(samples[i], static_cast<double>(samples.size() - i) / n);
    }
  }
  return out;
}

std::vector<std::pair<double, double>> log_histogram(const std::vector<double>& samples,
                                                     std::size_t bins) {
  if (bins < 2) throw ParameterError("histogram needs bins >= 2");
  if (samples.empty()) throw InsufficientDataError("histogram needs samples");
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("histogram samples must be positive");
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = std::log(*lo_it), hi = std::log(*hi_it);
  if (hi == lo) {
    lo -= 1e-9;
    hi += 1e-9;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> edges(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    edges[b] = std::exp(lo + width * static_cast<double>(b));
  }
  std::vector<std::size_t> counts(bins, 0);
  for (double x : samples) {
    auto b = static_cast<std::size_t>((std::log(x) - lo) / width);
    ++counts[std::min(b, bins - 1)];
  }
  const auto n = static_cast<double>(samples.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t b = 0; b < bins; ++b) {
    out.emplace_back(edges[b], static_cast<double>(counts[b]) / (n * (edges[b + 1] - edges[b])));
  }
  return out;
}

void emit_plot_data(const std::vector<double>& samples, std::size_t bins, const fs::path& dir) {
  if (samples.size() < 2) throw InsufficientDataError("plot data needs at least 2 samples");
  const auto hist = log_histogram(samples, bins);
  write_atomic(dir / "ccdf.csv", two_column_csv("x,ccdf", ccdf(samples)));
  write_atomic(dir / "histogram.csv", two_column_csv("bin_lower,density", hist));
}

std::vector<double> read_samples(const fs::path& path) {
  const auto text = read_file(path);
  const auto lines = lines_of(text);
  std::vector<double> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto field = split(lines[i], ',').front();
    if (out.empty() && i == 0) {
      double x = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
      if (res.ec != std::errc{}) continue;  // header
    }
    out.push_back(parse_double(field, i + 1));
  }
  return out;
}

OutputFiles write_run_outputs(ExperimentReport& report, const RunConfig& config,
                              const RunMeta& meta, const fs::path& dir, std::size_t bins) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  OutputFiles files;
  if (report.trajectory.empty()) {
    report.warnings.push_back("empty trajectory: timeseries.csv holds only the header");
  }
  write_timeseries(report, dir / "timeseries.csv");
  files.written.emplace_back("timeseries.csv");
  if (report.final_wealths.size() >= 2) {
    emit_plot_data(report.final_wealths, bins, dir);
    files.written.emplace_back("ccdf.csv");
    files.written.emplace_back("histogram.csv");
  }
  if (report.final_network) {
    std::ostringstream edges;
    write_edge_list(*report.final_network, edges);
    write_atomic(dir / "network.edges", edges.str());
    files.written.emplace_back("network.edges");
  }
  write_summary(report, config, meta, dir / "summary.json");
  files.written.emplace_back("summary.json");
  return files;
}

}  // namespace paretolab
