#pragma once

// Scenario generation from point forecasts plus Gaussian forecast errors,
// squared-distance scenario metric, simultaneous backward reduction and the
// Cartesian composition of independent quantities.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "aggsim/core.hpp"
#include "aggsim/errormodel.hpp"

namespace aggsim {

enum class Quantity { rt_price, pv, demand };

inline const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::rt_price: return "rt_price";
    case Quantity::pv: return "pv";
    case Quantity::demand: return "demand";
  }
  return "?";
}

inline bool is_non_negative_quantity(Quantity q) { return q == Quantity::pv || q == Quantity::demand; }

struct Scenario {
  std::vector<double> values;
  double probability = 0.0;

  bool operator==(const Scenario&) const = default;
};

inline constexpr double kProbabilityTolerance = 1e-9;

struct ScenarioSet {
  Quantity quantity = Quantity::rt_price;
  int first_hour = 1;  // hour of day (1..24) of values[0]
  std::vector<Scenario> scenarios;

  std::size_t size() const { return scenarios.size(); }
  std::size_t horizon() const { return scenarios.empty() ? 0 : scenarios.front().values.size(); }

  double total_probability() const {
    double p = 0.0;
    for (const auto& s : scenarios) p += s.probability;
    return p;
  }

  void validate() const {
    detail::require(!scenarios.empty(), "scenario set is empty");
    const auto h = horizon();
    for (const auto& s : scenarios) {
      detail::require(s.values.size() == h, "scenarios have different horizons");
      detail::require(s.probability >= 0.0 && std::isfinite(s.probability), "scenario probability must be >= 0");
      for (double v : s.values) detail::require(std::isfinite(v), "scenario values must be finite");
    }
    detail::require(std::abs(total_probability() - 1.0) <= kProbabilityTolerance,
                    "scenario probabilities must sum to one");
  }
};

namespace detail {

inline ScenarioSet scenarios_from_draws(Quantity quantity, int first_hour, std::span<const double> forecast_tail,
                                        const Eigen::MatrixXd& draws) {
  ScenarioSet set{quantity, first_hour, {}};
  const auto n = draws.rows();
  set.scenarios.reserve(static_cast<std::size_t>(n));
  const double p = 1.0 / static_cast<double>(n);
  const bool clamp = is_non_negative_quantity(quantity);
  for (Eigen::Index i = 0; i < n; ++i) {
    Scenario s;
    s.values.resize(forecast_tail.size());
    for (std::size_t t = 0; t < forecast_tail.size(); ++t) {
      double v = forecast_tail[t] + draws(i, static_cast<Eigen::Index>(t));
      if (clamp) v = std::max(v, 0.0);
      s.values[t] = v;
    }
    s.probability = p;
    set.scenarios.push_back(std::move(s));
  }
  return set;
}

}  // namespace detail

/// n equally likely day-ahead scenarios: forecast plus one error draw each.
/// PV and demand are clamped at zero from below.
inline ScenarioSet generate_da(std::span<const double> point_forecast, const GaussianErrorModel& err, std::size_t n,
                               std::uint64_t seed, Quantity quantity) {
  detail::require(point_forecast.size() == static_cast<std::size_t>(kHoursPerDay) && err.dim() == kHoursPerDay,
                  "generate_da: forecast and error model must cover 24 hours");
  detail::require(n >= 1, "generate_da: need at least one scenario");
  return detail::scenarios_from_draws(quantity, 1, point_forecast, sample(err, static_cast<Eigen::Index>(n), seed));
}

/// Scenarios for hours t+1..24 given realized values for hours 1..t
/// (t = realized.size()). The error model is conditioned on the realized
/// errors; the point forecast is not refitted.
inline ScenarioSet generate_rt(std::span<const double> point_forecast, const GaussianErrorModel& err,
                               std::span<const double> realized, std::size_t n, std::uint64_t seed,
                               Quantity quantity) {
  detail::require(point_forecast.size() == static_cast<std::size_t>(kHoursPerDay) && err.dim() == kHoursPerDay,
                  "generate_rt: forecast and error model must cover 24 hours");
  const auto t = realized.size();
  if (t >= static_cast<std::size_t>(kHoursPerDay)) {
    throw InvalidArgument("generate_rt: empty horizon after hour 24");
  }
  detail::require(t >= 1, "generate_rt: at least hour 1 must be realized");
  detail::require(n >= 1, "generate_rt: need at least one scenario");

  std::vector<int> hours(t);
  std::vector<double> observed(t);
  for (std::size_t h = 0; h < t; ++h) {
    hours[h] = static_cast<int>(h) + 1;
    observed[h] = realized[h] - point_forecast[h];
  }
  const auto cond = condition(err, hours, observed);
  return detail::scenarios_from_draws(quantity, static_cast<int>(t) + 1, point_forecast.subspan(t),
                                      sample(cond, static_cast<Eigen::Index>(n), seed));
}

/// Squared Euclidean distance over the common horizon.
inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("distance: scenario horizons differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

inline double distance(const Scenario& a, const Scenario& b) { return distance(a.values, b.values); }

/// Simultaneous backward reduction down to `k_preserve` scenarios.
///
/// Each pass deletes the candidate j minimizing
///   z_j = Σ_{i ∈ D ∪ {j}} p_i · min_{u ∉ D ∪ {j}} c(i, u),
/// ties going to the lowest index. Deleted probability moves to the nearest
/// preserved scenario. Preserved scenarios keep their input order.
inline ScenarioSet reduce(const ScenarioSet& set, std::size_t k_preserve) {
  set.validate();
  const std::size_t n = set.size();
  if (k_preserve < 1 || k_preserve > n) throw InvalidArgument("reduce: k_preserve out of range");
  if (k_preserve == n) return set;

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = distance(set.scenarios[i], set.scenarios[j]);
    }
  }
  auto c = [&](std::size_t i, std::size_t j) { return dist[i * n + j]; };

  std::vector<bool> deleted(n, false);
  // Nearest and second-nearest remaining scenario (other than itself) for every scenario.
  std::vector<std::size_t> first(n);
  std::vector<std::size_t> second(n);
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  auto refresh = [&](std::size_t i) {
    std::size_t a = none;
    std::size_t b = none;
    for (std::size_t u = 0; u < n; ++u) {
      if (u == i || deleted[u]) continue;
      if (a == none || c(i, u) < c(i, a)) {
        b = a;
        a = u;
      } else if (b == none || c(i, u) < c(i, b)) {
        b = u;
      }
    }
    first[i] = a;
    second[i] = b;
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  std::vector<double> bonus(n);
  for (std::size_t removed = 0; removed < n - k_preserve; ++removed) {
    // For deleted i the inner minimum is c(i, first[i]) unless j == first[i].
    double base = 0.0;
    std::fill(bonus.begin(), bonus.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!deleted[i]) continue;
      const double p = set.scenarios[i].probability;
      base += p * c(i, first[i]);
      if (second[i] != none) bonus[first[i]] += p * (c(i, second[i]) - c(i, first[i]));
    }
    std::size_t best = none;
    double best_z = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (deleted[j]) continue;
      const double z = base + bonus[j] + set.scenarios[j].probability * c(j, first[j]);
      if (z < best_z) {
        best_z = z;
        best = j;
      }
    }
    deleted[best] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (first[i] == best || second[i] == best || i == best) refresh(i);
    }
  }

  std::vector<std::size_t> index_of(n, none);
  ScenarioSet out{set.quantity, set.first_hour, {}};
  for (std::size_t i = 0; i < n; ++i) {
    if (!deleted[i]) {
      index_of[i] = out.scenarios.size();
      out.scenarios.push_back(set.scenarios[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (deleted[i]) out.scenarios[index_of[first[i]]].probability += set.scenarios[i].probability;
  }
  return out;
}

/// One joint scenario: a trajectory per component set.
struct JointScenario {
  std::vector<std::vector<double>> components;
  double probability = 0.0;
};

struct JointScenarioSet {
  std::vector<Quantity> quantities;
  int first_hour = 1;
  std::vector<JointScenario> scenarios;

  std::size_t size() const { return scenarios.size(); }
  std::size_t horizon() const { return scenarios.empty() ? 0 : scenarios.front().components.front().size(); }

  double total_probability() const {
    double p = 0.0;
    for (const auto& s : scenarios) p += s.probability;
    return p;
  }

  /// Trajectory of `q` in joint scenario k.
  std::span<const double> values(std::size_t k, Quantity q) const {
    const auto it = std::find(quantities.begin(), quantities.end(), q);
    if (it == quantities.end()) throw InvalidArgument(std::string("joint scenario set lacks ") + to_string(q));
    return scenarios[k].components[static_cast<std::size_t>(it - quantities.begin())];
  }
};

/// Cartesian product with product probabilities, first set varying slowest.
inline JointScenarioSet cross_product(std::span<const ScenarioSet> sets) {
  detail::require(!sets.empty(), "cross_product: no sets given");
  for (const auto& s : sets) {
    s.validate();
    if (s.horizon() != sets.front().horizon() || s.first_hour != sets.front().first_hour) {
      throw InvalidArgument("cross_product: horizon mismatch between scenario sets");
    }
  }
  JointScenarioSet out;
  out.first_hour = sets.front().first_hour;
  for (const auto& s : sets) out.quantities.push_back(s.quantity);
  out.scenarios.push_back({{}, 1.0});
  for (const auto& s : sets) {
    std::vector<JointScenario> next;
    next.reserve(out.scenarios.size() * s.size());
    for (const auto& partial : out.scenarios) {
      for (const auto& sc : s.scenarios) {
        JointScenario j = partial;
        j.components.push_back(sc.values);
        j.probability *= sc.probability;
        next.push_back(std::move(j));
      }
    }
    out.scenarios = std::move(next);
  }
  return out;
}

inline JointScenarioSet cross_product(std::initializer_list<ScenarioSet> sets) {
  return cross_product(std::span<const ScenarioSet>(sets.begin(), sets.size()));
}

}  // namespace aggsim
