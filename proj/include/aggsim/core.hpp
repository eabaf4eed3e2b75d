#pragma once

// Domain types shared by every module, the battery balance and the
// aggregation of residential units into one virtual resource.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aggsim/error.hpp"

namespace aggsim {

inline constexpr int kHoursPerDay = 24;

/// Whole UTC hour, stored as hours since the Unix epoch.
class CalendarHour {
 public:
  constexpr CalendarHour() = default;
  constexpr explicit CalendarHour(std::int64_t hours_since_epoch) : hours_(hours_since_epoch) {}

  static CalendarHour from_date(int year, unsigned month, unsigned day, int hour = 0) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok() || hour < 0 || hour > 23) {
      throw InvalidArgument("invalid calendar date");
    }
    const auto d = sys_days{ymd}.time_since_epoch().count();
    return CalendarHour{static_cast<std::int64_t>(d) * kHoursPerDay + hour};
  }

  /// Parses "YYYY-MM-DDTHH:00:00Z" (also accepts "YYYY-MM-DDTHH:00Z" and "YYYY-MM-DDTHH").
  static CalendarHour parse_iso(std::string_view text) {
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    int h = 0;
    int mi = 0;
    int sec = 0;
    const std::string s{text};
    char tail = 0;
    int n = std::sscanf(s.c_str(), "%4d-%2u-%2uT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &sec, &tail);
    if (n < 4) {
      throw InvalidArgument("malformed timestamp '" + s + "'");
    }
    if (mi != 0 || sec != 0) {
      throw InvalidArgument("timestamp '" + s + "' is not on a whole hour");
    }
    return from_date(y, mo, d, h);
  }

  std::string to_iso() const {
    using namespace std::chrono;
    const auto days_since = floor_div(hours_, kHoursPerDay);
    const year_month_day ymd{sys_days{std::chrono::days{days_since}}};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day());
    return buf;
  }

  /// "YYYY-MM-DD" of the day containing this hour.
  std::string date_label() const { return to_iso().substr(0, 10); }

  constexpr std::int64_t hours_since_epoch() const { return hours_; }
  constexpr int hour_of_day() const {
    return static_cast<int>(hours_ - floor_div(hours_, kHoursPerDay) * kHoursPerDay);
  }
  constexpr bool is_midnight() const { return hour_of_day() == 0; }

  constexpr CalendarHour operator+(std::int64_t h) const { return CalendarHour{hours_ + h}; }
  constexpr CalendarHour operator-(std::int64_t h) const { return CalendarHour{hours_ - h}; }
  constexpr std::int64_t operator-(CalendarHour other) const { return hours_ - other.hours_; }
  constexpr auto operator<=>(const CalendarHour&) const = default;

 private:
  static constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
  }

  std::int64_t hours_ = 0;
};

enum class Unit { currency_per_kwh, kw, kwh };

/// Hourly values; index i is hour offset i from the start time.
class HourlySeries {
 public:
  HourlySeries() = default;
  HourlySeries(CalendarHour start, std::vector<double> values, Unit unit)
      : start_(start), values_(std::move(values)), unit_(unit) {
    detail::require(!values_.empty(), "hourly series must hold at least one value");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw InvalidArgument("hourly series value at offset " + std::to_string(i) + " is not finite");
      }
    }
  }

  CalendarHour start() const { return start_; }
  CalendarHour end() const { return start_ + static_cast<std::int64_t>(values_.size()); }
  Unit unit() const { return unit_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Sub-series [offset, offset + count).
  HourlySeries slice(std::size_t offset, std::size_t count) const {
    detail::require(offset + count <= values_.size() && count > 0, "series slice out of range");
    return HourlySeries{start_ + static_cast<std::int64_t>(offset),
                        {values_.begin() + static_cast<std::ptrdiff_t>(offset),
                         values_.begin() + static_cast<std::ptrdiff_t>(offset + count)},
                        unit_};
  }

  /// Everything strictly before `t`.
  HourlySeries until(CalendarHour t) const {
    const auto n = t - start_;
    detail::require(n > 0 && static_cast<std::size_t>(n) <= values_.size(), "series cut point out of range");
    return slice(0, static_cast<std::size_t>(n));
  }

  bool all_non_negative() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
  }

  bool operator==(const HourlySeries&) const = default;

 private:
  CalendarHour start_{};
  std::vector<double> values_;
  Unit unit_ = Unit::kw;
};

struct BatterySpec {
  double s_min = 0.5;   // kWh
  double s_max = 4.5;   // kWh
  double eta = 0.9;     // charge/discharge efficiency
  double s_init = 2.5;  // kWh

  void validate() const {
    detail::require(std::isfinite(s_min) && std::isfinite(s_max) && std::isfinite(eta) && std::isfinite(s_init),
                    "battery parameters must be finite");
    detail::require(s_min >= 0.0 && s_min < s_max, "battery bounds must satisfy 0 <= s_min < s_max");
    detail::require(eta > 0.0 && eta <= 1.0, "battery efficiency must lie in (0, 1]");
    detail::require(s_init >= s_min && s_init <= s_max, "initial storage must lie within the battery bounds");
  }

  bool operator==(const BatterySpec&) const = default;
};

struct UnitSpec {
  std::string id;
  BatterySpec battery;
  HourlySeries pv_history;      // kW
  HourlySeries demand_history;  // kW

  void validate() const {
    battery.validate();
    detail::require(pv_history.start() == demand_history.start() && pv_history.size() == demand_history.size(),
                    "unit '" + id + "': PV and demand histories cover different ranges");
    detail::require(pv_history.size() % kHoursPerDay == 0,
                    "unit '" + id + "': history length is not a multiple of 24");
    detail::require(pv_history.all_non_negative() && demand_history.all_non_negative(),
                    "unit '" + id + "': PV and demand must be non-negative");
  }
};

/// Per-unit cost and bid parameters; the aggregator's values derive from these.
struct CostParams {
  double alpha = 0.4;  // currency/kWh^2, quadratic storage-swing cost of one battery
  double beta = 0.05;  // currency/kWh, network usage
  double c_max = 2.0;  // kW, DA bid cap of one unit
};

struct AggregatorSpec {
  BatterySpec battery;
  double c_max = 2.0;
  double alpha = 0.4;
  double beta = 0.05;
  std::size_t n_units = 1;

  void validate() const {
    battery.validate();
    detail::require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be non-negative");
    detail::require(std::isfinite(beta) && beta >= 0.0, "beta must be non-negative");
    detail::require(std::isfinite(c_max) && c_max > 0.0, "c_max must be positive");
    detail::require(n_units >= 1, "aggregator must represent at least one unit");
  }
};

/// Day-ahead commitments c_1..c_24 in kW, positive = sell.
struct BidSchedule {
  std::array<double, kHoursPerDay> commitments{};

  void validate(double c_max) const {
    for (int t = 0; t < kHoursPerDay; ++t) {
      const double c = commitments[static_cast<std::size_t>(t)];
      detail::require(std::isfinite(c) && std::abs(c) <= c_max,
                      "commitment for hour " + std::to_string(t + 1) + " exceeds the bid cap");
    }
  }

  bool operator==(const BidSchedule&) const = default;
};

/// Storage after one hour: s + eta * (-c + v - d - x). No clamping.
inline double battery_step(double s, double c, double v, double d, double x, double eta) {
  if (!(std::isfinite(s) && std::isfinite(c) && std::isfinite(v) && std::isfinite(d) && std::isfinite(x) &&
        std::isfinite(eta))) {
    throw InvalidArgument("battery_step: non-finite input");
  }
  detail::require(eta > 0.0 && eta <= 1.0, "battery_step: efficiency must lie in (0, 1]");
  return s + eta * (-c + v - d - x);
}

struct Aggregate {
  AggregatorSpec spec;
  HourlySeries pv;
  HourlySeries demand;
};

/// Sums battery bounds, initial storage and PV/demand series of the members.
///
/// The aggregate bid cap is the sum of the member caps. The degradation
/// coefficient is per battery, so an aggregate swing of Δ split evenly over N
/// identical batteries costs N·α·(Δ/N)² = (α/N)·Δ²; the aggregate uses α/N.
inline Aggregate aggregate_units(std::span<const UnitSpec> units, const CostParams& per_unit = {}) {
  detail::require(!units.empty(), "aggregate_units: no units given");
  const UnitSpec& first = units.front();
  for (const UnitSpec& u : units) {
    u.validate();
    if (u.pv_history.start() != first.pv_history.start() || u.pv_history.size() != first.pv_history.size()) {
      throw InvalidArgument("aggregate_units: unit '" + u.id + "' covers a different history range than '" +
                            first.id + "'");
    }
    if (u.battery.eta != first.battery.eta) {
      throw InvalidArgument("aggregate_units: unit '" + u.id +
                            "' has a different efficiency; heterogeneous efficiencies are not supported");
    }
  }

  BatterySpec battery{0.0, 0.0, first.battery.eta, 0.0};
  std::vector<double> pv(first.pv_history.size(), 0.0);
  std::vector<double> demand(first.demand_history.size(), 0.0);
  for (const UnitSpec& u : units) {
    battery.s_min += u.battery.s_min;
    battery.s_max += u.battery.s_max;
    battery.s_init += u.battery.s_init;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      pv[i] += u.pv_history[i];
      demand[i] += u.demand_history[i];
    }
  }

  const auto n = units.size();
  AggregatorSpec spec{battery, per_unit.c_max * static_cast<double>(n), per_unit.alpha / static_cast<double>(n),
                      per_unit.beta, n};
  spec.validate();
  return {spec, HourlySeries{first.pv_history.start(), std::move(pv), Unit::kw},
          HourlySeries{first.demand_history.start(), std::move(demand), Unit::kw}};
}

inline AggregatorSpec single_unit_spec(const UnitSpec& unit, const CostParams& params) {
  AggregatorSpec spec{unit.battery, params.c_max, params.alpha, params.beta, 1};
  spec.validate();
  return spec;
}

struct CostBreakdown {
  double da_energy = 0.0;    // -Σ p^D_t c_t
  double rt_energy = 0.0;    // -Σ p^R_t x_t
  double degradation = 0.0;  // α Σ (s_{t+1} - s_t)²
  double network = 0.0;      // β Σ |c_t + x_t|

  double total() const { return da_energy + rt_energy + degradation + network; }

  CostBreakdown& operator+=(const CostBreakdown& o) {
    da_energy += o.da_energy;
    rt_energy += o.rt_energy;
    degradation += o.degradation;
    network += o.network;
    return *this;
  }

  bool operator==(const CostBreakdown&) const = default;
};

/// Realized cost of one day from its settled quantities. `storage` holds s_1..s_25.
inline CostBreakdown realized_cost(const BidSchedule& schedule, std::span<const double> rt_bids,
                                   std::span<const double> rt_prices, std::span<const double> da_prices,
                                   std::span<const double> storage, double alpha, double beta) {
  const auto n = schedule.commitments.size();
  if (rt_bids.size() != n || rt_prices.size() != n || da_prices.size() != n || storage.size() != n + 1) {
    throw InvalidArgument("realized_cost: expected 24 bids/prices and 25 storage states");
  }
  CostBreakdown out;
  for (std::size_t t = 0; t < n; ++t) {
    const double c = schedule.commitments[t];
    const double x = rt_bids[t];
    const double swing = storage[t + 1] - storage[t];
    out.da_energy -= da_prices[t] * c;
    out.rt_energy -= rt_prices[t] * x;
    out.degradation += alpha * swing * swing;
    out.network += beta * std::abs(c + x);
  }
  return out;
}

}  // namespace aggsim
