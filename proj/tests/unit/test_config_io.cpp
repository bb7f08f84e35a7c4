#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "paretolab/config.hpp"
#include "paretolab/errors.hpp"
#include "paretolab/experiments.hpp"
#include "paretolab/io.hpp"
#include "test_support.hpp"

using namespace paretolab;
namespace fs = std::filesystem;

namespace {

constexpr const char* kMinimal =
    R"({"experiment": "baseline", "engine": "kesten", "n_agents": 500, "seed": 3})";

std::string validation_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<accepted>";
}

std::string validation_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "<accepted>";
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("paretolab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config resolves defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.experiment == ExperimentKind::Baseline);
  CHECK(c.engine == EngineKind::Kesten);
  CHECK(c.n_agents == 500);
  CHECK(c.seed == 3);
  CHECK(c.steps == 1000);
  CHECK_FALSE(c.burn_in.has_value());
  CHECK(c.stride == 10);
  CHECK(c.replicas == 10);
  CHECK(c.kesten.alpha_target == 2.0);
  CHECK(c.inference.max_burn_in > 0);

  const auto x = parse_config(
      R"({"experiment": "baseline", "engine": "exchange", "n_agents": 400, "seed": 1})");
  CHECK(x.stride == 400);
}

TEST_CASE("digest is stable and ignores output_dir") {
  const auto a = parse_config(kMinimal);
  auto b = parse_config(kMinimal);
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a).size() == 64);
  b.output_dir = "elsewhere";
  CHECK(config_digest(a) == config_digest(b));
  b.seed = 4;
  CHECK(config_digest(a) != config_digest(b));

  // Canonical JSON parses back to the same config.
  const auto again = parse_config(to_json(a));
  CHECK(to_json(again) == to_json(a));
  CHECK(config_digest(again) == config_digest(a));
}

TEST_CASE("out-of-range alpha target names its path and range") {
  const std::string text =
      R"({"experiment": "baseline", "engine": "kesten", "n_agents": 500, "seed": 3,
          "kesten": {"alpha_target": 2.5}})";
  CHECK(validation_path(text) == "/kesten/alpha_target");
  CHECK(validation_message(text).find("(1, 2]") != std::string::npos);
}

TEST_CASE("strict parsing rejects duplicates, unknown keys and wrong types") {
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 5,
                            "seed": 1, "seed": 2})") == "/seed");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 5,
                            "seed": 1, "kesten": {"sigma": 0.3, "sigma": 0.4}})") ==
        "/kesten/sigma");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 5,
                            "seed": 1, "colour": 2})") == "/colour");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 5,
                            "seed": 1, "exchange": {"gama": 0.5}})") == "/exchange/gama");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": "5",
                            "seed": 1})") == "/n_agents");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "seed": 1})") ==
        "/n_agents");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "warp", "n_agents": 5,
                            "seed": 1})") == "/engine");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 5,
                            "seed": 1, "burn_in": "later"})") == "/burn_in");
  CHECK(validation_path("{not json") == "/");
}

TEST_CASE("cross-field rules") {
  CHECK(validation_path(R"({"experiment": "intervention", "engine": "kesten", "n_agents": 50,
                            "seed": 1})") == "/engine");
  CHECK(validation_path(R"({"experiment": "intervention", "engine": "exchange", "n_agents": 50,
                            "seed": 1, "exchange": {"gamma": 0.1},
                            "channel": {"gamma_gov": 0.2}})") == "/channel/gamma_gov");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "exchange", "n_agents": 2,
                            "seed": 1})") == "/n_agents");
  CHECK(validation_path(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 50,
                            "seed": 1, "inference": {"bootstrap": 1}})") ==
        "/inference/bootstrap");
  const auto t = parse_config(R"({"experiment": "thermalization", "engine": "exchange",
                                  "n_agents": 100, "seed": 1})");
  CHECK(t.thermalization.n_a == 50);
  CHECK(t.thermalization.n_b == 50);
}

TEST_CASE("time series has one row per stride plus header") {
  auto c = parse_config(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 200,
                            "seed": 9, "steps": 30, "stride": 10, "burn_in": 0,
                            "replicas": 1})");
  const auto report = run_experiment(c);
  const auto csv = timeseries_csv(report.trajectory);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.substr(0, kTimeseriesHeader.size()) == kTimeseriesHeader);

  const auto parsed = parse_timeseries_csv(csv);
  REQUIRE(parsed.size() == 3);
  CHECK(timeseries_csv(parsed) == csv);
  CHECK(parsed[2].step == 30);
  CHECK(parsed[0].omega == report.trajectory[0].omega);
}

TEST_CASE("format_double round-trips bits") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) {
    const auto s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("empty run writes a header-only CSV and warns") {
  auto c = parse_config(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 200,
                            "seed": 9, "steps": 0, "burn_in": 0, "replicas": 1})");
  auto report = run_experiment(c);
  CHECK(report.trajectory.empty());
  const auto dir = scratch_dir("empty");
  write_run_outputs(report, c, RunMeta{}, dir);
  CHECK(slurp(dir / "timeseries.csv") == std::string(kTimeseriesHeader) + "\n");
  bool warned = false;
  for (const auto& w : report.warnings) warned |= w.find("empty trajectory") != std::string::npos;
  CHECK(warned);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["trajectory_rows"] == 0);
}

TEST_CASE("summary echoes config and digest, meta stays outside") {
  auto c = parse_config(R"({"experiment": "baseline", "engine": "kesten", "n_agents": 300,
                            "seed": 2, "steps": 20, "stride": 10, "burn_in": 0,
                            "replicas": 2})");
  const auto report = run_experiment(c);
  const auto s1 = nlohmann::json::parse(summary_json(report, c, RunMeta{1.0, "t1", "a"}));
  const auto s2 = nlohmann::json::parse(summary_json(report, c, RunMeta{9.0, "t2", "b"}));
  CHECK(s1["config_digest"] == config_digest(c));
  CHECK(s1["config"]["seed"] == 2);
  CHECK(s1["seeds"].size() == 2);
  CHECK(s1["meta"]["version"] == "a");
  auto a = s1, b = s2;
  a.erase("meta");
  b.erase("meta");
  CHECK(a == b);
  // The echoed config reproduces the digest.
  const auto echoed = parse_config(s1["config"].dump());
  CHECK(config_digest(echoed) == s1["config_digest"]);
}

TEST_CASE("ccdf of a Pareto sample has slope -alpha") {
  const auto xs = testing::pareto_sample(2.0, 1.0, 100000, 11);
  const auto c = ccdf(xs);
  CHECK(c.front().second == 1.0);
  // Least squares on log-log points with 1 <= x <= 10.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& [x, p] : c) {
    if (x > 10.0) break;
    const double lx = std::log(x), ly = std::log(p);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-2.0).epsilon(0.03));
}

TEST_CASE("plot data edge cases") {
  const auto dir = scratch_dir("plot");
  const std::vector<double> constant(50, 3.0);
  const auto c = ccdf(constant);
  REQUIRE(c.size() == 1);
  CHECK(c[0].first == 3.0);
  CHECK(c[0].second == 1.0);
  const auto h = log_histogram(constant, 4);
  double mass = 0.0;
  for (std::size_t b = 0; b < h.size(); ++b) {
    const double upper = b + 1 < h.size() ? h[b + 1].first : 3.0 * std::exp(1e-9);
    mass += h[b].second * (upper - h[b].first);
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

  emit_plot_data({1.0, 4.0}, 2, dir);
  CHECK(slurp(dir / "ccdf.csv") == "x,ccdf\n1,1\n4,0.5\n");
  const auto hist = slurp(dir / "histogram.csv");
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 3);

  CHECK_THROWS_AS(emit_plot_data({1.0}, 2, dir), InsufficientDataError);
  CHECK_THROWS_AS(emit_plot_data({1.0, 2.0}, 1, dir), ParameterError);
  CHECK_THROWS_AS(emit_plot_data({1.0, -2.0}, 3, dir), DomainError);
}

TEST_CASE("unwritable destinations raise IoError") {
  CHECK_THROWS_AS(write_atomic("/nonexistent_dir_for_paretolab/x.csv", "a"), IoError);
  const auto dir = scratch_dir("io");
  const auto file = dir / "plain";
  write_atomic(file, "x");
  CHECK(slurp(file) == "x");
  CHECK_FALSE(fs::exists(dir / "plain.tmp"));
  CHECK_THROWS_AS(emit_plot_data({1.0, 2.0}, 2, file / "sub"), IoError);
}

TEST_CASE("read_samples tolerates a header and blank lines") {
  const auto dir = scratch_dir("samples");
  write_atomic(dir / "s.csv", "wealth,id\n1.5,0\n\n2.5,1\n");
  const auto xs = read_samples(dir / "s.csv");
  REQUIRE(xs.size() == 2);
  CHECK(xs[0] == 1.5);
  CHECK(xs[1] == 2.5);
  write_atomic(dir / "bad.csv", "1\nzz\n");
  CHECK_THROWS_AS(read_samples(dir / "bad.csv"), DataError);
  CHECK_THROWS_AS(read_samples(dir / "missing.csv"), IoError);
}

TEST_CASE("malformed time series are rejected") {
  CHECK_THROWS_AS(parse_timeseries_csv("step,omega\n"), DataError);
  CHECK_THROWS_AS(parse_timeseries_csv(std::string(kTimeseriesHeader) + "\n1,2\n"), DataError);
}
