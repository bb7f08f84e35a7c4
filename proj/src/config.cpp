#include "paretolab/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "paretolab/errors.hpp"

namespace paretolab {

using nlohmann::json;

namespace {

template <class E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr std::array<EnumName<ExperimentKind>, 4> kExperiments{{
    {ExperimentKind::Baseline, "baseline"},
    {ExperimentKind::Conservation, "conservation"},
    {ExperimentKind::Intervention, "intervention"},
    {ExperimentKind::Thermalization, "thermalization"},
}};
constexpr std::array<EnumName<EngineKind>, 2> kEngines{{
    {EngineKind::Kesten, "kesten"},
    {EngineKind::Exchange, "exchange"},
}};
constexpr std::array<EnumName<MoneyLegRule>, 2> kMoneyLegRules{{
    {MoneyLegRule::FixedFraction, "fixed_fraction"},
    {MoneyLegRule::UniformFraction, "uniform_fraction"},
}};
constexpr std::array<EnumName<LinkSampling>, 2> kLinkSampling{{
    {LinkSampling::Uniform, "uniform"},
    {LinkSampling::WeightPlusOne, "weight_plus_one"},
}};
constexpr std::array<EnumName<Redistribution>, 2> kRedistribution{{
    {Redistribution::UniformPerCapita, "uniform_per_capita"},
    {Redistribution::ProportionalToWealth, "proportional_to_wealth"},
}};
constexpr std::array<EnumName<Selection>, 2> kSelection{{
    {Selection::BreadthFirstBall, "breadth_first_ball"},
    {Selection::RandomFraction, "random_fraction"},
}};
constexpr std::array<EnumName<EAlpha>, 2> kEAlpha{{
    {EAlpha::Global, "global"},
    {EAlpha::Subsystem, "subsystem"},
}};
constexpr std::array<EnumName<EDenominator>, 2> kEDenominator{{
    {EDenominator::Omega, "omega"},
    {EDenominator::Lambda, "lambda"},
}};

template <class E, std::size_t N>
std::string_view name_of(const std::array<EnumName<E>, N>& table, E value) {
  for (const auto& e : table) {
    if (e.value == value) return e.name;
  }
  return "?";
}

// Reads the members of one JSON object, tracking which keys were consumed so
// that leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ValidationError(where(), "expected an object");
  }

  const json* find(const std::string& key) {
    const auto it = object_.find(key);
    if (it == object_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  std::string path_of(const std::string& key) const { return path_ + "/" + key; }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) throw ValidationError(path_of(key), "required field is missing");
    return *v;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ValidationError(path_of(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ValidationError(path_of(key), "expected a finite number");
    }
  }

  template <class U>
  void read_count(const std::string& key, U& out) {
    if (const json* v = find(key)) out = count_of(*v, path_of(key));
  }

  template <class E, std::size_t N>
  void read_enum(const std::string& key, E& out, const std::array<EnumName<E>, N>& table) {
    if (const json* v = find(key)) out = enum_of(*v, path_of(key), table);
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ValidationError(path_of(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  /// Rejects every key that was not consumed.
  void finish() const {
    for (const auto& [key, _] : object_.items()) {
      if (!used_.count(key)) throw ValidationError(path_of(key), "unknown key");
    }
  }

  static std::uint64_t count_of(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ValidationError(path, "must be >= 0");
    throw ValidationError(path, "expected a non-negative integer");
  }

  template <class E, std::size_t N>
  static E enum_of(const json& v, const std::string& path, const std::array<EnumName<E>, N>& table) {
    if (!v.is_string()) throw ValidationError(path, "expected a string");
    const auto s = v.get<std::string>();
    std::string options;
    for (const auto& e : table) {
      if (e.name == s) return e.value;
      options += (options.empty() ? "" : " | ") + std::string(e.name);
    }
    throw ValidationError(path, "unknown value \"" + s + "\", expected one of " + options);
  }

 private:
  std::string where() const { return path_.empty() ? "/" : path_; }

  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

template <class Fn>
void read_section(ObjectReader& parent, const std::string& key, Fn fn) {
  if (const json* v = parent.find(key)) {
    ObjectReader r(*v, parent.path_of(key));
    fn(r);
    r.finish();
  }
}

std::string format_double(double x) { return json(x).dump(); }

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ValidationError(path, what);
}

// Parse once with a callback that rejects duplicate keys in any object.
json parse_strict(std::string_view text) {
  std::vector<std::set<std::string>> keys;
  std::vector<std::string> path;
  std::string pending;
  const auto callback = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        keys.emplace_back();
        path.push_back(pending);
        pending.clear();
        break;
      case json::parse_event_t::object_end:
        keys.pop_back();
        path.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!keys.back().insert(key).second) {
          std::string where;
          for (std::size_t i = 1; i < path.size(); ++i) where += "/" + path[i];
          throw ValidationError(where + "/" + key, "duplicate key");
        }
        pending = key;
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text.begin(), text.end(), callback);
  } catch (const json::parse_error& e) {
    throw ValidationError("/", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) { return name_of(kExperiments, kind); }
std::string_view to_string(EngineKind kind) { return name_of(kEngines, kind); }

RunConfig parse_config(std::string_view text) {
  const json doc = parse_strict(text);
  RunConfig c;
  ObjectReader root(doc, "");
  c.experiment = ObjectReader::enum_of(root.require("experiment"), "/experiment", kExperiments);
  c.engine = ObjectReader::enum_of(root.require("engine"), "/engine", kEngines);
  c.n_agents = ObjectReader::count_of(root.require("n_agents"), "/n_agents");
  c.seed = ObjectReader::count_of(root.require("seed"), "/seed");
  root.read_count("steps", c.steps);
  if (const json* b = root.find("burn_in")) {
    if (b->is_string()) {
      check(b->get<std::string>() == "auto", "/burn_in", "expected \"auto\" or a count");
      c.burn_in.reset();
    } else {
      c.burn_in = ObjectReader::count_of(*b, "/burn_in");
    }
  }
  root.read_count("stride", c.stride);
  root.read_count("replicas", c.replicas);
  root.read("output_dir", c.output_dir);

  read_section(root, "kesten", [&](ObjectReader& r) {
    r.read("alpha_target", c.kesten.alpha_target);
    r.read("sigma", c.kesten.sigma);
    r.read("x_min", c.kesten.x_min);
  });
  read_section(root, "exchange", [&](ObjectReader& r) {
    r.read("gamma", c.exchange.gamma);
    r.read_enum("money_leg_rule", c.exchange.money_leg_rule, kMoneyLegRules);
    r.read("f", c.exchange.f);
    r.read_enum("link_sampling", c.exchange.link_sampling, kLinkSampling);
    r.read("initial_wealth", c.exchange.initial_wealth);
  });
  read_section(root, "network", [&](ObjectReader& r) { r.read_count("m", c.network.m); });
  read_section(root, "channel", [&](ObjectReader& r) {
    r.read("tax_rate", c.channel.tax_rate);
    r.read("gamma_gov", c.channel.gamma_gov);
    r.read_enum("redistribution", c.channel.redistribution, kRedistribution);
    r.read_enum("selection", c.channel.selection, kSelection);
    r.read("fraction", c.channel.fraction);
  });
  read_section(root, "thermalization", [&](ObjectReader& r) {
    r.read("alpha_a", c.thermalization.alpha_a);
    r.read("alpha_b", c.thermalization.alpha_b);
    r.read_count("n_a", c.thermalization.n_a);
    r.read_count("n_b", c.thermalization.n_b);
    r.read_count("coupling", c.thermalization.coupling);
  });
  read_section(root, "inference", [&](ObjectReader& r) {
    r.read_count("flow_stride", c.inference.flow_stride);
    r.read_enum("e_alpha", c.inference.e_alpha, kEAlpha);
    r.read_enum("e_denominator", c.inference.e_denominator, kEDenominator);
    r.read_count("bootstrap", c.inference.bootstrap);
    r.read_count("max_burn_in", c.inference.max_burn_in);
  });
  root.finish();
  resolve(c);
  return c;
}

void resolve(RunConfig& c) {
  const bool exchange = c.engine == EngineKind::Exchange;
  const bool thermal = c.experiment == ExperimentKind::Thermalization;
  if (c.experiment == ExperimentKind::Intervention || thermal) {
    check(exchange, "/engine", "the " + std::string(to_string(c.experiment)) +
                                   " experiment needs the exchange engine");
  }
  check(c.n_agents >= 2, "/n_agents", "must be >= 2");
  check(c.replicas >= 1, "/replicas", "must be >= 1");

  const auto& k = c.kesten;
  check(k.alpha_target > 1.0 && k.alpha_target <= 2.0, "/kesten/alpha_target",
        "must be in (1, 2], got " + format_double(k.alpha_target));
  check(k.sigma > 0.0, "/kesten/sigma", "must be > 0");
  check(k.x_min > 0.0, "/kesten/x_min", "must be > 0");

  const auto& e = c.exchange;
  check(e.gamma >= 0.0 && e.gamma <= 1.0, "/exchange/gamma",
        "must be in [0, 1], got " + format_double(e.gamma));
  check(e.f > 0.0 && e.f < 1.0, "/exchange/f", "must be in (0, 1), got " + format_double(e.f));
  check(e.initial_wealth > 0.0, "/exchange/initial_wealth", "must be > 0");

  check(c.network.m >= 1, "/network/m", "must be >= 1");
  if (exchange && !thermal) {
    check(c.n_agents > c.network.m, "/n_agents", "must exceed network.m");
  }

  const auto& ch = c.channel;
  check(ch.tax_rate >= 0.0 && ch.tax_rate < 1.0, "/channel/tax_rate",
        "must be in [0, 1), got " + format_double(ch.tax_rate));
  check(ch.gamma_gov >= 0.0 && ch.gamma_gov < 1.0, "/channel/gamma_gov",
        "must be in [0, 1), got " + format_double(ch.gamma_gov));
  if (c.experiment == ExperimentKind::Intervention) {
    check(ch.gamma_gov <= e.gamma, "/channel/gamma_gov", "must not exceed exchange.gamma");
  }
  check(ch.fraction > 0.0 && ch.fraction < 1.0, "/channel/fraction",
        "must be in (0, 1), got " + format_double(ch.fraction));

  auto& th = c.thermalization;
  check(th.alpha_a >= 1.0 && th.alpha_a <= 2.0, "/thermalization/alpha_a", "must be in [1, 2]");
  check(th.alpha_b >= 1.0 && th.alpha_b <= 2.0, "/thermalization/alpha_b", "must be in [1, 2]");
  check(th.coupling >= 1, "/thermalization/coupling", "must be >= 1");
  if (th.n_a == 0) th.n_a = c.n_agents / 2;
  if (th.n_b == 0) th.n_b = c.n_agents - c.n_agents / 2;
  if (thermal) {
    check(th.n_a > c.network.m, "/thermalization/n_a", "must exceed network.m");
    check(th.n_b > c.network.m, "/thermalization/n_b", "must exceed network.m");
  }

  if (c.stride == 0) c.stride = thermal ? 10 : exchange ? c.n_agents : 10;
  auto& inf = c.inference;
  check(inf.flow_stride >= 1, "/inference/flow_stride", "must be >= 1");
  check(inf.bootstrap == 0 || inf.bootstrap >= 2, "/inference/bootstrap",
        "must be 0 (off) or >= 2");
  if (inf.max_burn_in == 0) {
    const std::uint64_t largest = thermal ? std::max(th.n_a, th.n_b) : c.n_agents;
    inf.max_burn_in = exchange ? 1000 * largest : 100'000;
  }
  check(inf.max_burn_in >= 1000, "/inference/max_burn_in", "must be >= 1000");
}

namespace {

json to_json_object(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["engine"] = to_string(c.engine);
  j["n_agents"] = c.n_agents;
  j["steps"] = c.steps;
  j["burn_in"] = c.burn_in ? json(*c.burn_in) : json("auto");
  j["stride"] = c.stride;
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  j["output_dir"] = c.output_dir;
  j["kesten"] = {{"alpha_target", c.kesten.alpha_target},
                 {"sigma", c.kesten.sigma},
                 {"x_min", c.kesten.x_min}};
  j["exchange"] = {{"gamma", c.exchange.gamma},
                   {"money_leg_rule", name_of(kMoneyLegRules, c.exchange.money_leg_rule)},
                   {"f", c.exchange.f},
                   {"link_sampling", name_of(kLinkSampling, c.exchange.link_sampling)},
                   {"initial_wealth", c.exchange.initial_wealth}};
  j["network"] = {{"m", c.network.m}};
  j["channel"] = {{"tax_rate", c.channel.tax_rate},
                  {"gamma_gov", c.channel.gamma_gov},
                  {"redistribution", name_of(kRedistribution, c.channel.redistribution)},
                  {"selection", name_of(kSelection, c.channel.selection)},
                  {"fraction", c.channel.fraction}};
  j["thermalization"] = {{"alpha_a", c.thermalization.alpha_a},
                         {"alpha_b", c.thermalization.alpha_b},
                         {"n_a", c.thermalization.n_a},
                         {"n_b", c.thermalization.n_b},
                         {"coupling", c.thermalization.coupling}};
  j["inference"] = {{"flow_stride", c.inference.flow_stride},
                    {"e_alpha", name_of(kEAlpha, c.inference.e_alpha)},
                    {"e_denominator", name_of(kEDenominator, c.inference.e_denominator)},
                    {"bootstrap", c.inference.bootstrap},
                    {"max_burn_in", c.inference.max_burn_in}};
  return j;
}

}  // namespace

std::string to_json(const RunConfig& config, int indent) {
  return to_json_object(config).dump(indent);
}

std::string config_digest(const RunConfig& config) {
  auto j = to_json_object(config);
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xf];
  }
  return hex;
}

}  // namespace paretolab
