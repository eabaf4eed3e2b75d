#pragma once

// JSON run configuration. Every field is optional and defaults to the
// reference setup; unknown keys are rejected so typos do not pass silently.

#include <filesystem>
#include <optional>
#include <type_traits>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggsim/core.hpp"
#include "aggsim/io/dataset.hpp"
#include "aggsim/io/synth.hpp"
#include "aggsim/sim.hpp"

namespace aggsim::io {

using Json = nlohmann::json;

struct BatteryConfig {
  double capacity_kwh = 5.0;
  double efficiency = 0.9;
  double min_fraction = 0.1;
  double max_fraction = 0.9;
  double initial_fraction = 0.5;

  BatterySpec spec() const {
    return {min_fraction * capacity_kwh, max_fraction * capacity_kwh, efficiency, initial_fraction * capacity_kwh};
  }
};

struct RunConfig {
  std::optional<DatasetFiles> data;  // synthesized from `synth` when absent
  SynthSpec synth;
  BatteryConfig battery;
  CostParams costs;
  std::size_t n_raw = 50;
  std::size_t k_preserve = 5;
  SarimaOrders price_orders;
  SarimaOrders pv_orders;
  SarimaOrders demand_orders;
  SolverOptions solver;
  std::uint64_t seed = 1;
  std::vector<int> cases{1, 2, 3};
  Window window;
  std::filesystem::path output_dir = "out";

  CaseConfig case_config(int c) const {
    CaseConfig cc;
    cc.kind = static_cast<CaseKind>(c);
    cc.n_raw = n_raw;
    cc.k_preserve = k_preserve;
    cc.seed = seed;
    cc.price_orders = price_orders;
    cc.pv_orders = pv_orders;
    cc.demand_orders = demand_orders;
    cc.solver = solver;
    return cc;
  }

  /// Throws ValidationError naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
      throw ValidationError("config field '" + field + "': " + msg);
    };
    const auto& b = battery;
    if (!(b.capacity_kwh > 0.0)) fail("battery.capacity_kwh", "must be positive");
    if (!(b.efficiency > 0.0 && b.efficiency <= 1.0)) fail("battery.efficiency", "must lie in (0, 1]");
    if (!(b.min_fraction >= 0.0 && b.min_fraction < b.max_fraction))
      fail("battery.min_fraction", "must satisfy 0 <= min_fraction < max_fraction");
    if (!(b.max_fraction <= 1.0)) fail("battery.max_fraction", "must not exceed 1");
    if (!(b.initial_fraction >= b.min_fraction && b.initial_fraction <= b.max_fraction))
      fail("battery.initial_fraction", "must lie within [min_fraction, max_fraction]");
    if (!(costs.alpha >= 0.0)) fail("costs.alpha", "must be non-negative");
    if (!(costs.beta >= 0.0)) fail("costs.beta", "must be non-negative");
    if (!(costs.c_max > 0.0)) fail("costs.c_max_kw", "must be positive");
    if (k_preserve < 1) fail("scenarios.k_preserve", "must be at least 1");
    if (n_raw < k_preserve) fail("scenarios.n_raw", "must be at least k_preserve");
    const std::pair<const char*, const SarimaOrders*> orders[] = {
        {"sarima.rt_price", &price_orders}, {"sarima.pv", &pv_orders}, {"sarima.demand", &demand_orders}};
    for (const auto& [name, o] : orders) {
      try {
        o->validate();
      } catch (const InvalidArgument& e) {
        fail(name, e.what());
      }
    }
    if (!(solver.tolerance > 0.0)) fail("solver.tolerance", "must be positive");
    if (solver.max_iterations < 1) fail("solver.max_iterations", "must be at least 1");
    if (cases.empty()) fail("cases", "must list at least one case");
    for (int c : cases) {
      if (c < 1 || c > 3) fail("cases", "entries must be 1, 2 or 3");
    }
    if (window.training_days < 35) fail("window.training_days", "must be at least 35");
    if (window.evaluation_days < 1) fail("window.evaluation_days", "must be at least 1");
    if (synth.n_units < 1) fail("synth.n_units", "must be at least 1");
    if (synth.n_days < 40) fail("synth.n_days", "must be at least 40");
    if (!(synth.spike_probability >= 0.0 && synth.spike_probability <= 1.0))
      fail("synth.spike_probability", "must lie in [0, 1]");
    if (!(synth.spike_scale >= 0.0)) fail("synth.spike_scale", "must be non-negative");
    if (!(synth.spread_persistence >= 0.0 && synth.spread_persistence < 1.0))
      fail("synth.spread_persistence", "must lie in [0, 1)");
    if (!(synth.spread_noise >= 0.0)) fail("synth.spread_noise", "must be non-negative");
    if (!data && synth.n_days < window.training_days + window.evaluation_days)
      fail("synth.n_days", "must cover window.training_days + window.evaluation_days");
    if (data && data->units.empty()) fail("data.units", "must list at least one unit file");
  }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError("config field '" + display() + "': must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    out = convert<T>(*it, field(key));
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!node_.contains(key)) throw ValidationError("missing config field '" + field(key) + "'");
    get(key, out);
  }

  std::optional<ConfigReader> section(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    return ConfigReader(*it, field(key));
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      (void)value;
      if (!seen_.contains(key)) throw ValidationError("unknown config field '" + field(key.c_str()) + "'");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  template <typename T>
  static T convert(const Json& v, const std::string& name) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ValidationError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) throw ValidationError("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ValidationError("config field '" + name + "': wrong type or value (" + v.dump() + ")");
    }
  }

  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_orders(ConfigReader& r, SarimaOrders& o) {
  r.get("p", o.p);
  r.get("d", o.d);
  r.get("q", o.q);
  r.get("P", o.P);
  r.get("D", o.D);
  r.get("Q", o.Q);
  r.get("s", o.s);
  r.finish();
}

}  // namespace detail

/// Parses and validates a config document. Relative data paths resolve against `base_dir`.
inline RunConfig parse_config(const Json& doc, const std::filesystem::path& base_dir = {}) {
  RunConfig cfg;
  detail::ConfigReader root(doc, "");
  if (auto data = root.section("data")) {
    DatasetFiles files;
    std::string prices;
    std::vector<std::string> units;
    data->require("prices", prices);
    data->require("units", units);
    data->finish();
    files.prices = base_dir / prices;
    for (const auto& u : units) files.units.push_back(base_dir / u);
    cfg.data = std::move(files);
  }
  if (auto s = root.section("synth")) {
    std::string start;
    s->get("seed", cfg.synth.seed);
    s->get("n_units", cfg.synth.n_units);
    s->get("n_days", cfg.synth.n_days);
    s->get("start", start);
    s->get("pv_peak_kw", cfg.synth.pv_peak_kw);
    s->get("demand_level_kw", cfg.synth.demand_level_kw);
    s->get("price_level", cfg.synth.price_level);
    s->get("spike_probability", cfg.synth.spike_probability);
    s->get("spike_scale", cfg.synth.spike_scale);
    s->get("spread_persistence", cfg.synth.spread_persistence);
    s->get("spread_noise", cfg.synth.spread_noise);
    s->finish();
    if (!start.empty()) {
      try {
        cfg.synth.start = CalendarHour::parse_iso(start);
      } catch (const InvalidArgument& e) {
        throw ValidationError(std::string("config field 'synth.start': ") + e.what());
      }
      if (!cfg.synth.start.is_midnight()) throw ValidationError("config field 'synth.start': must be a midnight");
    }
  }
  if (auto b = root.section("battery")) {
    b->get("capacity_kwh", cfg.battery.capacity_kwh);
    b->get("efficiency", cfg.battery.efficiency);
    b->get("min_fraction", cfg.battery.min_fraction);
    b->get("max_fraction", cfg.battery.max_fraction);
    b->get("initial_fraction", cfg.battery.initial_fraction);
    b->finish();
  }
  if (auto c = root.section("costs")) {
    c->get("alpha", cfg.costs.alpha);
    c->get("beta", cfg.costs.beta);
    c->get("c_max_kw", cfg.costs.c_max);
    c->finish();
  }
  if (auto s = root.section("scenarios")) {
    s->get("n_raw", cfg.n_raw);
    s->get("k_preserve", cfg.k_preserve);
    s->finish();
  }
  if (auto s = root.section("sarima")) {
    if (auto o = s->section("rt_price")) detail::read_orders(*o, cfg.price_orders);
    if (auto o = s->section("pv")) detail::read_orders(*o, cfg.pv_orders);
    if (auto o = s->section("demand")) detail::read_orders(*o, cfg.demand_orders);
    s->finish();
  }
  if (auto s = root.section("solver")) {
    s->get("tolerance", cfg.solver.tolerance);
    s->get("max_iterations", cfg.solver.max_iterations);
    s->finish();
  }
  if (auto w = root.section("window")) {
    w->get("training_days", cfg.window.training_days);
    w->get("evaluation_days", cfg.window.evaluation_days);
    w->finish();
  }
  root.get("seed", cfg.seed);
  root.get("cases", cfg.cases);
  std::string out;
  root.get("output_dir", out);
  if (!out.empty()) cfg.output_dir = base_dir / out;
  root.finish();
  cfg.synth.battery = cfg.battery.spec();
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

/// The effective configuration, with every default spelled out.
inline Json to_json(const RunConfig& cfg, const std::filesystem::path& base_dir = {}) {
  auto orders = [](const SarimaOrders& o) {
    return Json{{"p", o.p}, {"d", o.d}, {"q", o.q}, {"P", o.P}, {"D", o.D}, {"Q", o.Q}, {"s", o.s}};
  };
  Json j;
  if (cfg.data) {
    Json units = Json::array();
    auto rel = [&base_dir](const std::filesystem::path& p) {
      return base_dir.empty() ? p.generic_string() : std::filesystem::relative(p, base_dir).generic_string();
    };
    for (const auto& u : cfg.data->units) units.push_back(rel(u));
    j["data"] = {{"prices", rel(cfg.data->prices)},
                 {"units", units}};
  }
  j["synth"] = {{"seed", cfg.synth.seed},
                {"n_units", cfg.synth.n_units},
                {"n_days", cfg.synth.n_days},
                {"start", cfg.synth.start.to_iso()},
                {"pv_peak_kw", cfg.synth.pv_peak_kw},
                {"demand_level_kw", cfg.synth.demand_level_kw},
                {"price_level", cfg.synth.price_level},
                {"spike_probability", cfg.synth.spike_probability},
                {"spike_scale", cfg.synth.spike_scale},
                {"spread_persistence", cfg.synth.spread_persistence},
                {"spread_noise", cfg.synth.spread_noise}};
  j["battery"] = {{"capacity_kwh", cfg.battery.capacity_kwh},
                  {"efficiency", cfg.battery.efficiency},
                  {"min_fraction", cfg.battery.min_fraction},
                  {"max_fraction", cfg.battery.max_fraction},
                  {"initial_fraction", cfg.battery.initial_fraction}};
  j["costs"] = {{"alpha", cfg.costs.alpha}, {"beta", cfg.costs.beta}, {"c_max_kw", cfg.costs.c_max}};
  j["scenarios"] = {{"n_raw", cfg.n_raw}, {"k_preserve", cfg.k_preserve}};
  j["sarima"] = {{"rt_price", orders(cfg.price_orders)}, {"pv", orders(cfg.pv_orders)}, {"demand", orders(cfg.demand_orders)}};
  j["solver"] = {{"tolerance", cfg.solver.tolerance}, {"max_iterations", cfg.solver.max_iterations}};
  j["window"] = {{"training_days", cfg.window.training_days}, {"evaluation_days", cfg.window.evaluation_days}};
  j["seed"] = cfg.seed;
  j["cases"] = cfg.cases;
  j["output_dir"] = base_dir.empty() ? cfg.output_dir.generic_string()
                                     : std::filesystem::relative(cfg.output_dir, base_dir).generic_string();
  return j;
}

/// Loads the configured dataset, or synthesizes one when no data files are given.
inline Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.data) return ingest(*cfg.data, cfg.battery.spec());
  auto spec = cfg.synth;
  spec.battery = cfg.battery.spec();
  return synthesize(spec);
}

}  // namespace aggsim::io
