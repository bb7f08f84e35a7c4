// paretolab command line: run experiments from JSON configs, fit Pareto
// tails to sample files and emit plot data.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "paretolab/config.hpp"
#include "paretolab/errors.hpp"
#include "paretolab/experiments.hpp"
#include "paretolab/inference.hpp"
#include "paretolab/io.hpp"
#include "paretolab/version.hpp"

namespace {

using namespace paretolab;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                      const std::optional<std::string>& output_dir) {
  auto config = parse_config(slurp(path));
  if (seed) config.seed = *seed;
  if (output_dir) config.output_dir = *output_dir;
  return config;
}

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& output_dir, std::size_t bins) {
  const auto config = load_config(path, seed, output_dir);
  const auto start = std::chrono::steady_clock::now();
  RunMeta meta;
  meta.started_at = utc_now();
  meta.version = kVersion;
  auto report = run_experiment(config);
  meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto files = write_run_outputs(report, config, meta, config.output_dir, bins);

  std::cout << report.experiment << " digest " << report.config_digest << "\n";
  for (const auto& v : report.verdicts) {
    std::cout << "  " << to_string(v.status) << "  " << v.name << "  " << v.passed << "/"
              << v.replicas << " (need " << v.required << ")  value " << format_double(v.value)
              << "\n";
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& f : files.written) {
    std::cout << "  wrote " << (std::filesystem::path(config.output_dir) / f).string() << "\n";
  }
  return 0;
}

int cmd_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  const auto config = load_config(path, seed, std::nullopt);
  std::cout << to_json(config, 2) << "\n" << "digest " << config_digest(config) << "\n";
  return 0;
}

int cmd_estimate(const std::string& path, std::optional<double> x_min, std::size_t bootstrap,
                 std::uint64_t seed) {
  const auto xs = read_samples(path);
  const auto fit = x_min ? pareto_mle(xs, *x_min) : fit_pareto(xs);
  nlohmann::ordered_json j;
  j["n"] = xs.size();
  j["alpha_hat"] = fit.alpha_hat;
  j["x_min"] = fit.x_min;
  j["std_error"] = fit.std_error;
  j["ks_distance"] = fit.ks_distance;
  j["ks_critical_1pct"] = ks_critical_value_1pct(fit.n_tail);
  j["n_tail"] = fit.n_tail;
  const double hill = top_decile_alpha(xs);
  j["hill_top_decile"] = std::isfinite(hill) ? nlohmann::ordered_json(hill) : nullptr;
  j["gini"] = gini(xs);
  if (bootstrap > 0) {
    const auto ci = bootstrap_alpha(xs, fit.x_min, bootstrap, seed);
    j["bootstrap"] = {{"lower", ci.lower}, {"upper", ci.upper}, {"resamples", ci.resamples}};
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_plotdata(const std::string& path, std::size_t bins, const std::string& dir) {
  const auto xs = read_samples(path);
  std::filesystem::create_directories(dir);
  emit_plot_data(xs, bins, dir);
  std::cout << "wrote " << (std::filesystem::path(dir) / "ccdf.csv").string() << " and "
            << (std::filesystem::path(dir) / "histogram.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for Pareto wealth distributions"};
  app.set_version_flag("--version", std::string(paretolab::kVersion));
  app.require_subcommand(1);

  std::string config_path, samples_path, dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<double> x_min;
  std::size_t bins = 30, bootstrap = 0;
  std::uint64_t bootstrap_seed = 0;

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--output-dir", output_dir, "Override the config output_dir");
  run->add_option("--bins", bins, "Histogram bins of the plot data")->check(CLI::Range(2, 100000));

  auto* config = app.add_subcommand("config", "Print the resolved config and its digest");
  config->add_option("config", config_path, "Config file")->required();
  config->add_option("--seed", seed, "Override the config seed");

  auto* estimate = app.add_subcommand("estimate", "Fit a Pareto tail to a sample file");
  estimate->add_option("samples", samples_path, "One value per line")->required();
  estimate->add_option("--x-min", x_min, "Fixed tail onset instead of KS selection");
  estimate->add_option("--bootstrap", bootstrap, "Bootstrap resamples for a 95% interval");
  estimate->add_option("--seed", bootstrap_seed, "Bootstrap seed");

  auto* plotdata = app.add_subcommand("plotdata", "Write CCDF and log-binned histogram files");
  plotdata->add_option("samples", samples_path, "One value per line")->required();
  plotdata->add_option("--bins", bins, "Histogram bins")->required()->check(CLI::Range(2, 100000));
  plotdata->add_option("--output-dir", dir, "Directory for ccdf.csv and histogram.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, seed, output_dir, bins);
    if (*config) return cmd_config(config_path, seed);
    if (*estimate) return cmd_estimate(samples_path, x_min, bootstrap, bootstrap_seed);
    if (*plotdata) return cmd_plotdata(samples_path, bins, dir);
  } catch (const paretolab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
