#pragma once

// Rolling-horizon two-settlement simulation: one DA solve and 24 RT solves
// per day, settled against realizations, for the three comparison cases.

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aggsim/core.hpp"
#include "aggsim/errormodel.hpp"
#include "aggsim/forecast.hpp"
#include "aggsim/optimize/market.hpp"
#include "aggsim/random.hpp"
#include "aggsim/scenario.hpp"

namespace aggsim {

enum class CaseKind : int {
  aggregated_stochastic = 1,
  aggregated_naive = 2,
  per_unit_stochastic = 3,
};

inline const char* describe(CaseKind k) {
  switch (k) {
    case CaseKind::aggregated_stochastic: return "aggregation + stochastic decision making";
    case CaseKind::aggregated_naive: return "aggregation, previous-day deterministic decisions";
    case CaseKind::per_unit_stochastic: return "no aggregation, stochastic decision making";
  }
  return "?";
}

inline constexpr std::array<Quantity, 3> kUncertainQuantities{Quantity::rt_price, Quantity::pv, Quantity::demand};

struct CaseConfig {
  CaseKind kind = CaseKind::aggregated_stochastic;
  std::size_t n_raw = 50;
  std::size_t k_preserve = 5;
  std::uint64_t seed = 1;
  SarimaOrders price_orders;
  SarimaOrders pv_orders;
  SarimaOrders demand_orders;
  SolverOptions solver;

  const SarimaOrders& orders(Quantity q) const {
    switch (q) {
      case Quantity::rt_price: return price_orders;
      case Quantity::pv: return pv_orders;
      case Quantity::demand: return demand_orders;
    }
    return price_orders;
  }

  void validate() const {
    detail::require(k_preserve >= 1 && n_raw >= k_preserve, "case config: need n_raw >= k_preserve >= 1");
    price_orders.validate();
    pv_orders.validate();
    demand_orders.validate();
  }
};

struct MarketDay {
  std::string date;
  std::array<double, kHoursPerDay> da_prices{};
  std::array<double, kHoursPerDay> rt_prices{};
  std::array<double, kHoursPerDay> pv_actual{};
  std::array<double, kHoursPerDay> demand_actual{};

  const std::array<double, kHoursPerDay>& actual(Quantity q) const {
    switch (q) {
      case Quantity::rt_price: return rt_prices;
      case Quantity::pv: return pv_actual;
      case Quantity::demand: return demand_actual;
    }
    return rt_prices;
  }

  void validate() const {
    for (int t = 0; t < kHoursPerDay; ++t) {
      const auto i = static_cast<std::size_t>(t);
      detail::require(std::isfinite(da_prices[i]) && std::isfinite(rt_prices[i]) && std::isfinite(pv_actual[i]) &&
                          std::isfinite(demand_actual[i]),
                      "market day " + date + ": non-finite value");
      detail::require(pv_actual[i] >= 0.0 && demand_actual[i] >= 0.0,
                      "market day " + date + ": negative PV or demand");
    }
  }
};

struct QuantityModel {
  SarimaModel sarima;
  GaussianErrorModel errors;
};

struct ForecastModels {
  QuantityModel rt_price;
  QuantityModel pv;
  QuantityModel demand;

  const QuantityModel& get(Quantity q) const {
    switch (q) {
      case Quantity::rt_price: return rt_price;
      case Quantity::pv: return pv;
      case Quantity::demand: return demand;
    }
    return rt_price;
  }
};

/// Everything observed strictly before the simulated day.
struct DayHistory {
  HourlySeries rt_price;
  HourlySeries pv;
  HourlySeries demand;

  const HourlySeries& get(Quantity q) const {
    switch (q) {
      case Quantity::rt_price: return rt_price;
      case Quantity::pv: return pv;
      case Quantity::demand: return demand;
    }
    return rt_price;
  }
};

/// Bookkeeping of one decision stage (hour 0 = DA).
struct StageStats {
  int hour = 0;
  std::array<std::size_t, 3> raw_scenarios{};
  std::array<std::size_t, 3> preserved_scenarios{};
  std::size_t joint_scenarios = 0;
  int solver_iterations = 0;
  double solve_seconds = 0.0;

  bool same_decisions(const StageStats& o) const {
    return hour == o.hour && raw_scenarios == o.raw_scenarios && preserved_scenarios == o.preserved_scenarios &&
           joint_scenarios == o.joint_scenarios && solver_iterations == o.solver_iterations;
  }
};

struct DayResult {
  std::string date;
  BidSchedule schedule;
  std::array<double, kHoursPerDay> rt_bids{};
  std::array<double, kHoursPerDay + 1> storage{};
  std::array<double, kHoursPerDay> da_prices{};
  std::array<double, kHoursPerDay> rt_prices{};
  std::array<double, kHoursPerDay> pv{};
  std::array<double, kHoursPerDay> demand{};
  CostBreakdown cost;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<StageStats> stages;
  /// Reduced DA scenario sets (for plotting); empty for the naive case.
  std::vector<ScenarioSet> da_scenarios;

  double cost_total() const { return cost.total(); }

  double carry_out() const { return storage.back(); }

  /// Recomputes the cost from the recorded fields.
  CostBreakdown resettle() const {
    return realized_cost(schedule, rt_bids, rt_prices, da_prices, storage, alpha, beta);
  }

  /// Equality of every decision and settlement field (wall-clock times excluded).
  bool same_outcome(const DayResult& o) const {
    if (!(date == o.date && schedule == o.schedule && rt_bids == o.rt_bids && storage == o.storage &&
          cost == o.cost && stages.size() == o.stages.size())) {
      return false;
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (!stages[i].same_decisions(o.stages[i])) return false;
    }
    return true;
  }
};

/// Fits SARIMA on `training` and the Gaussian model of its replayed errors.
inline QuantityModel train_quantity(const HourlySeries& training, const SarimaOrders& orders) {
  QuantityModel m;
  m.sarima = fit(training, orders);
  m.errors = estimate(residual_matrix(m.sarima, training));
  return m;
}

namespace detail {

inline std::size_t quantity_index(Quantity q) { return static_cast<std::size_t>(q); }

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline DayRealization yesterday_of(const DayHistory& history) {
  DayRealization y;
  const std::size_t n = history.rt_price.size();
  detail::require(n >= static_cast<std::size_t>(kHoursPerDay) && history.pv.size() == n && history.demand.size() == n,
                  "naive baseline needs at least one full day of history");
  for (std::size_t h = 0; h < static_cast<std::size_t>(kHoursPerDay); ++h) {
    y.rt_price[h] = history.rt_price[n - kHoursPerDay + h];
    y.pv[h] = history.pv[n - kHoursPerDay + h];
    y.demand[h] = history.demand[n - kHoursPerDay + h];
  }
  return y;
}

}  // namespace detail

/// Simulates one day: a DA solve, then 24 RT solves with conditioned scenarios.
/// Storage starts at `carry_in` and evolves with the realized PV and demand.
inline DayResult run_day(const CaseConfig& config, const AggregatorSpec& agg, const MarketDay& day,
                         const ForecastModels* models, const DayHistory& history, double carry_in,
                         std::uint64_t day_index) {
  config.validate();
  agg.validate();
  day.validate();
  const bool naive = config.kind == CaseKind::aggregated_naive;
  detail::require(naive || models != nullptr, "run_day: stochastic cases need fitted models");

  DayResult result;
  result.date = day.date;
  result.da_prices = day.da_prices;
  result.rt_prices = day.rt_prices;
  result.pv = day.pv_actual;
  result.demand = day.demand_actual;
  result.alpha = agg.alpha;
  result.beta = agg.beta;
  result.storage[0] = carry_in;

  std::array<std::vector<double>, 3> point{};
  if (!naive) {
    for (Quantity q : kUncertainQuantities) {
      const auto fc = forecast(models->get(q).sarima, history.get(q), kHoursPerDay);
      point[detail::quantity_index(q)].assign(fc.values().begin(), fc.values().end());
    }
  }
  const DayRealization yesterday = naive ? detail::yesterday_of(history) : DayRealization{};

  auto scenarios_for = [&](int hour, StageStats& stats) {
    std::vector<ScenarioSet> sets;
    for (Quantity q : kUncertainQuantities) {
      const auto qi = detail::quantity_index(q);
      const auto seed = derive_seed(config.seed, {day_index, static_cast<std::uint64_t>(hour), qi});
      const auto& err = models->get(q).errors;
      ScenarioSet raw = hour == 0
                            ? generate_da(point[qi], err, config.n_raw, seed, q)
                            : generate_rt(point[qi], err,
                                          std::span<const double>(day.actual(q).data(), static_cast<std::size_t>(hour)),
                                          config.n_raw, seed, q);
      stats.raw_scenarios[qi] = raw.size();
      sets.push_back(reduce(raw, config.k_preserve));
      stats.preserved_scenarios[qi] = sets.back().size();
    }
    return sets;
  };

  // Day-ahead stage.
  {
    StageStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    if (naive) {
      const auto problem = build_da(agg, day.da_prices, single_scenario(yesterday, 1), carry_in);
      const auto sol = solve_or_throw(problem.qp, config.solver, day.date + " DA stage (naive)");
      result.schedule = extract_schedule(problem, sol, agg.c_max);
      stats.joint_scenarios = 1;
      stats.solver_iterations = sol.iterations;
    } else {
      auto sets = scenarios_for(0, stats);
      const auto joint = cross_product(sets);
      stats.joint_scenarios = joint.size();
      const auto problem = build_da(agg, day.da_prices, joint, carry_in);
      const auto sol = solve_or_throw(problem.qp, config.solver, day.date + " DA stage");
      result.schedule = extract_schedule(problem, sol, agg.c_max);
      stats.solver_iterations = sol.iterations;
      result.da_scenarios = std::move(sets);
    }
    stats.solve_seconds = detail::seconds_since(t0);
    result.stages.push_back(stats);
  }

  // Real-time stages.
  for (int t = 1; t <= kHoursPerDay; ++t) {
    const auto ti = static_cast<std::size_t>(t - 1);
    StageStats stats;
    stats.hour = t;
    const auto t0 = std::chrono::steady_clock::now();
    const double s_t = result.storage[ti];
    const HourObservation obs{day.rt_prices[ti], day.pv_actual[ti], day.demand_actual[ti]};

    JointScenarioSet joint;
    if (t < kHoursPerDay) {
      joint = naive ? single_scenario(yesterday, t + 1) : cross_product(scenarios_for(t, stats));
    }
    stats.joint_scenarios = joint.size();
    const auto problem = build_rt(agg, t, s_t, result.schedule, obs, joint);
    const auto sol = solve_or_throw(problem.qp, config.solver,
                                    day.date + " RT hour " + std::to_string(t) + " (storage " + std::to_string(s_t) + ")");
    const double x = extract_rt_bid(problem, sol);
    result.rt_bids[ti] = x;
    result.storage[ti + 1] = battery_step(s_t, result.schedule.commitments[ti], obs.pv, obs.demand, x, agg.battery.eta);
    stats.solver_iterations = sol.iterations;
    stats.solve_seconds = detail::seconds_since(t0);
    result.stages.push_back(stats);
  }

  result.cost = result.resettle();
  return result;
}

/// Unit PV/demand histories plus market prices over one common hourly range.
struct Dataset {
  HourlySeries da_price;
  HourlySeries rt_price;
  std::vector<UnitSpec> units;

  std::size_t days() const { return rt_price.size() / static_cast<std::size_t>(kHoursPerDay); }

  void validate() const {
    detail::require(!units.empty(), "dataset: no units");
    detail::require(da_price.start() == rt_price.start() && da_price.size() == rt_price.size(),
                    "dataset: DA and RT price series cover different ranges");
    detail::require(rt_price.start().is_midnight(), "dataset: series must start at midnight");
    detail::require(rt_price.size() % kHoursPerDay == 0, "dataset: length must be whole days");
    for (const auto& u : units) {
      u.validate();
      detail::require(u.pv_history.start() == rt_price.start() && u.pv_history.size() == rt_price.size(),
                      "dataset: unit '" + u.id + "' does not cover the price range");
    }
  }
};

struct Window {
  std::size_t training_days = 180;
  std::size_t evaluation_days = 28;
};

/// One simulated actor (the aggregate, or a single unit in case 3).
struct ActorRun {
  std::string id;
  std::vector<DayResult> days;
  CostBreakdown total;
};

struct HorizonResult {
  CaseConfig config;
  std::vector<ActorRun> actors;
  CostBreakdown total;

  double total_cost() const { return total.total(); }
};

namespace detail {

inline MarketDay market_day(const HourlySeries& da, const HourlySeries& rt, const HourlySeries& pv,
                            const HourlySeries& demand, std::size_t day) {
  MarketDay m;
  const std::size_t off = day * kHoursPerDay;
  m.date = (rt.start() + static_cast<std::int64_t>(off)).date_label();
  for (std::size_t h = 0; h < static_cast<std::size_t>(kHoursPerDay); ++h) {
    m.da_prices[h] = da[off + h];
    m.rt_prices[h] = rt[off + h];
    m.pv_actual[h] = pv[off + h];
    m.demand_actual[h] = demand[off + h];
  }
  return m;
}

/// Runs one actor over the evaluation window. Models are trained once on the
/// training window and never refitted.
inline ActorRun run_actor(const CaseConfig& config, const std::string& id, const AggregatorSpec& agg,
                          const Dataset& data, const HourlySeries& pv, const HourlySeries& demand,
                          const QuantityModel* price_model, const Window& window) {
  const auto day_hours = static_cast<std::size_t>(kHoursPerDay);
  const std::size_t train_hours = window.training_days * day_hours;
  std::optional<ForecastModels> models;
  if (config.kind != CaseKind::aggregated_naive) {
    models.emplace();
    models->rt_price = price_model ? *price_model
                                   : train_quantity(data.rt_price.slice(0, train_hours), config.price_orders);
    models->pv = train_quantity(pv.slice(0, train_hours), config.pv_orders);
    models->demand = train_quantity(demand.slice(0, train_hours), config.demand_orders);
  }

  ActorRun run;
  run.id = id;
  double storage = agg.battery.s_init;
  for (std::size_t e = 0; e < window.evaluation_days; ++e) {
    const std::size_t day = window.training_days + e;
    const std::size_t cut = day * day_hours;
    const DayHistory history{data.rt_price.slice(0, cut), pv.slice(0, cut), demand.slice(0, cut)};
    const auto m = market_day(data.da_price, data.rt_price, pv, demand, day);
    auto result = run_day(config, agg, m, models ? &*models : nullptr, history, storage, day);
    storage = result.carry_out();
    run.total += result.cost;
    run.days.push_back(std::move(result));
  }
  return run;
}

}  // namespace detail

/// Simulates one case over the evaluation window that follows the training window.
/// Cases 1 and 2 aggregate all units; case 3 simulates every unit on its own
/// (sharing the price model) and sums the costs.
inline HorizonResult run_horizon(const CaseConfig& config, const Dataset& data, const Window& window,
                                 const CostParams& per_unit = {}) {
  config.validate();
  data.validate();
  detail::require(window.evaluation_days >= 1, "run_horizon: need at least one evaluation day");
  detail::require(window.training_days + window.evaluation_days <= data.days(),
                  "run_horizon: dataset shorter than training + evaluation window");

  HorizonResult out;
  out.config = config;
  if (config.kind == CaseKind::per_unit_stochastic) {
    const auto price_model =
        train_quantity(data.rt_price.slice(0, window.training_days * kHoursPerDay), config.price_orders);
    for (const auto& unit : data.units) {
      const auto agg = single_unit_spec(unit, per_unit);
      out.actors.push_back(detail::run_actor(config, unit.id, agg, data, unit.pv_history, unit.demand_history,
                                             &price_model, window));
      out.total += out.actors.back().total;
    }
  } else {
    const auto aggregate = aggregate_units(data.units, per_unit);
    out.actors.push_back(
        detail::run_actor(config, "aggregate", aggregate.spec, data, aggregate.pv, aggregate.demand, nullptr, window));
    out.total = out.actors.back().total;
  }
  return out;
}

struct ComparisonRow {
  CaseKind kind;
  CostBreakdown cost;
};

/// Runs every configuration on the same data and window.
inline std::vector<HorizonResult> compare_cases(std::span<const CaseConfig> configs, const Dataset& data,
                                                const Window& window, const CostParams& per_unit = {}) {
  std::vector<HorizonResult> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(run_horizon(c, data, window, per_unit));
  return out;
}

}  // namespace aggsim
