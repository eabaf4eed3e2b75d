#pragma once

// Synthetic stand-in for the residential PV/demand and market price data.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "aggsim/core.hpp"
#include "aggsim/random.hpp"
#include "aggsim/sim.hpp"

namespace aggsim::io {

struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t n_units = 6;
  std::size_t n_days = 208;
  CalendarHour start = CalendarHour::from_date(2011, 8, 5);
  double pv_peak_kw = 1.0;
  double demand_level_kw = 0.7;
  double price_level = 30.0;
  double spike_probability = 0.01;
  double spike_scale = 0.5;         // mean spike height as a fraction of price_level
  double spread_persistence = 0.6;  // hourly AR coefficient of the RT - DA spread
  double spread_noise = 0.08;       // innovation sd of the spread as a fraction of price_level
  BatterySpec battery;

  void validate() const {
    aggsim::detail::require(n_units >= 1, "synth: need at least one unit");
    aggsim::detail::require(n_days >= 40, "synth: need at least 40 days (training + evaluation)");
    aggsim::detail::require(start.is_midnight(), "synth: start must be midnight");
    aggsim::detail::require(pv_peak_kw >= 0.0 && demand_level_kw > 0.0 && price_level >= 0.0,
                    "synth: levels must be non-negative");
    aggsim::detail::require(spike_probability >= 0.0 && spike_probability <= 1.0, "synth: spike probability must lie in [0, 1]");
    aggsim::detail::require(spike_scale >= 0.0 && spread_noise >= 0.0, "synth: spike and spread scales must be non-negative");
    aggsim::detail::require(spread_persistence >= 0.0 && spread_persistence < 1.0,
                            "synth: spread persistence must lie in [0, 1)");
    battery.validate();
  }
};

namespace detail {

/// Day of year in [0, 365) and weekday (0 = Monday).
inline std::pair<double, int> calendar_of(CalendarHour midnight) {
  const auto days = midnight.hours_since_epoch() / kHoursPerDay;
  const std::chrono::sys_days d{std::chrono::days{days}};
  const std::chrono::year_month_day ymd{d};
  const std::chrono::sys_days jan1{ymd.year() / std::chrono::January / 1};
  const auto doy = static_cast<double>((d - jan1).count());
  const auto wd = std::chrono::weekday{d}.iso_encoding() - 1;
  return {doy, static_cast<int>(wd)};
}

/// Sine of the solar elevation proxy at mid-hour h (0-based). Non-positive means night.
inline double daylight(double doy, int h) {
  const double day_length = 12.0 + 4.0 * std::sin(2.0 * std::numbers::pi * (doy - 80.0) / 365.0);
  const double sunrise = 12.5 - day_length / 2.0;
  return std::sin(std::numbers::pi * (static_cast<double>(h) + 0.5 - sunrise) / day_length);
}

/// Mean-one double-peak household profile (morning and evening).
inline std::array<double, kHoursPerDay> demand_profile() {
  std::array<double, kHoursPerDay> p{};
  double sum = 0.0;
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double x = static_cast<double>(h) + 0.5;
    p[static_cast<std::size_t>(h)] =
        0.55 + 0.5 * std::exp(-(x - 8.0) * (x - 8.0) / 4.0) + 0.9 * std::exp(-(x - 19.5) * (x - 19.5) / 6.0);
    sum += p[static_cast<std::size_t>(h)];
  }
  for (auto& v : p) v *= kHoursPerDay / sum;
  return p;
}

/// DA price multipliers for hours 1..24: valley over hours 1-6, peak over 17-20.
inline constexpr std::array<double, kHoursPerDay> kDaShape{
    0.70, 0.66, 0.64, 0.63, 0.65, 0.72, 0.85, 0.98, 1.05, 1.05, 1.03, 1.00,
    0.98, 0.96, 0.98, 1.08, 1.32, 1.42, 1.45, 1.35, 1.18, 1.02, 0.90, 0.78};

}  // namespace detail

inline HourlySeries synth_pv(const SynthSpec& spec, std::size_t unit, double scale) {
  RandomStream rng(derive_seed(spec.seed, {1, unit}));
  std::vector<double> v;
  v.reserve(spec.n_days * kHoursPerDay);
  for (std::size_t d = 0; d < spec.n_days; ++d) {
    const auto [doy, wd] = detail::calendar_of(spec.start + static_cast<std::int64_t>(d * kHoursPerDay));
    (void)wd;
    const double season = 0.75 + 0.25 * std::cos(2.0 * std::numbers::pi * (doy - 172.0) / 365.0);
    const double cloud = std::exp(rng.normal(-0.08, 0.4));
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double e = detail::daylight(doy, h);
      const double noise = std::exp(rng.normal(-0.01, 0.15));
      v.push_back(e <= 0.0 ? 0.0 : std::min(1.2, e * season * cloud * noise) * spec.pv_peak_kw * scale);
    }
  }
  return {spec.start, std::move(v), Unit::kw};
}

inline HourlySeries synth_demand(const SynthSpec& spec, std::size_t unit, double scale) {
  RandomStream rng(derive_seed(spec.seed, {2, unit}));
  const auto profile = detail::demand_profile();
  const double level = spec.demand_level_kw * scale;
  std::vector<double> v;
  v.reserve(spec.n_days * kHoursPerDay);
  double ar = 0.0;
  for (std::size_t i = 0; i < spec.n_days * kHoursPerDay; ++i) {
    ar = 0.7 * ar + rng.normal(0.0, 0.1 * level);
    v.push_back(std::max(0.05 * level, level * profile[i % kHoursPerDay] + ar));
  }
  return {spec.start, std::move(v), Unit::kw};
}

struct SynthPrices {
  HourlySeries da;
  HourlySeries rt;
};

inline SynthPrices synth_prices(const SynthSpec& spec) {
  RandomStream rng(derive_seed(spec.seed, {3}));
  const std::size_t n = spec.n_days * kHoursPerDay;
  std::vector<double> da;
  std::vector<double> rt;
  da.reserve(n);
  rt.reserve(n);
  double level = 0.0;
  double ar = 0.0;
  for (std::size_t d = 0; d < spec.n_days; ++d) {
    const auto [doy, wd] = detail::calendar_of(spec.start + static_cast<std::int64_t>(d * kHoursPerDay));
    (void)doy;
    level = 0.8 * level + rng.normal(0.0, 0.04);
    const double day_factor = (1.0 + level) * (wd >= 5 ? 0.92 : 1.0);
    for (std::size_t h = 0; h < static_cast<std::size_t>(kHoursPerDay); ++h) {
      const double p = spec.price_level * day_factor * detail::kDaShape[h] * (1.0 + rng.normal(0.0, 0.02));
      ar = spec.spread_persistence * ar + rng.normal(0.0, spec.spread_noise * spec.price_level);
      double spike = 0.0;
      if (rng.uniform() < spec.spike_probability) spike = -spec.spike_scale * spec.price_level * std::log(1.0 - rng.uniform());
      da.push_back(p);
      rt.push_back(p + ar + spike);
    }
  }
  return {{spec.start, std::move(da), Unit::currency_per_kwh}, {spec.start, std::move(rt), Unit::currency_per_kwh}};
}

/// Full dataset. Units differ in PV and demand scale (±20%) and noise.
inline Dataset synthesize(const SynthSpec& spec) {
  spec.validate();
  Dataset data;
  auto prices = synth_prices(spec);
  data.da_price = std::move(prices.da);
  data.rt_price = std::move(prices.rt);
  RandomStream scales(derive_seed(spec.seed, {4}));
  for (std::size_t u = 0; u < spec.n_units; ++u) {
    const double pv_scale = scales.uniform(0.8, 1.2);
    const double demand_scale = scales.uniform(0.8, 1.2);
    char id[32];
    std::snprintf(id, sizeof(id), "unit_%02zu", u + 1);
    data.units.push_back({id, spec.battery, synth_pv(spec, u, pv_scale), synth_demand(spec, u, demand_scale)});
  }
  data.validate();
  return data;
}

}  // namespace aggsim::io
