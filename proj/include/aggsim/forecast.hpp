#pragma once

// Seasonal ARIMA fitted by conditional sum of squares, with day-ahead point
// forecasts and a replayed matrix of historical day-ahead forecast errors.
//
// Model on the differenced series w = (1-B)^d (1-B^s)^D y:
//   φ(B) Φ(B^s) (w_t - μ) = θ(B) Θ(B^s) e_t
// with φ(B) = 1 - Σ φ_i B^i and θ(B) = 1 + Σ θ_i B^i (seasonal factors alike).

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "aggsim/core.hpp"

namespace aggsim {

struct SarimaOrders {
  int p = 1;
  int d = 0;
  int q = 1;
  int P = 1;
  int D = 1;
  int Q = 1;
  int s = 24;

  void validate() const {
    for (int o : {p, d, q, P, D, Q}) {
      detail::require(o >= 0 && o <= 4, "SARIMA orders must lie in [0, 4]");
    }
    detail::require(s >= 1, "season length must be at least 1");
    detail::require(d + D <= 2, "total differencing order d + D must not exceed 2");
  }

  int coefficient_count() const { return p + q + P + Q; }
  int parameter_count() const { return coefficient_count() + 1; }
  int ar_lag() const { return p + P * s; }
  int ma_lag() const { return q + Q * s; }
  int diff_lag() const { return d + D * s; }
  /// Observations needed in front of the first forecast.
  int required_history() const { return std::max(1, diff_lag() + ar_lag()); }

  bool operator==(const SarimaOrders&) const = default;
};

struct SarimaModel {
  SarimaOrders orders;
  std::vector<double> ar_coeffs;
  std::vector<double> ma_coeffs;
  std::vector<double> seasonal_ar_coeffs;
  std::vector<double> seasonal_ma_coeffs;
  double intercept = 0.0;  // mean of the differenced series
  double residual_variance = 0.0;
  std::vector<double> training_tail;
  /// Hours of day whose training values were all exactly zero; forecast as 0.
  std::vector<int> zero_hours;
  bool converged = true;
  int iterations = 0;
  double gradient_norm = 0.0;
};

namespace detail {

using Poly = std::vector<double>;

/// Coefficients c_0..c_n of (1-B)^d (1-B^s)^D, c_0 = 1.
inline Poly difference_polynomial(int d, int D, int s) {
  Poly poly{1.0};
  auto multiply = [&poly](int lag) {
    Poly out(poly.size() + static_cast<std::size_t>(lag), 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      out[i] += poly[i];
      out[i + static_cast<std::size_t>(lag)] -= poly[i];
    }
    poly = std::move(out);
  };
  for (int i = 0; i < d; ++i) multiply(1);
  for (int i = 0; i < D; ++i) multiply(s);
  return poly;
}

/// Stationary AR coefficients from partial autocorrelations in (-1, 1).
inline std::vector<double> pacf_to_ar(const std::vector<double>& r) {
  std::vector<double> phi;
  phi.reserve(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) {
    std::vector<double> next(j + 1);
    for (std::size_t i = 0; i < j; ++i) next[i] = phi[i] - r[j] * phi[j - 1 - i];
    next[j] = r[j];
    phi = std::move(next);
  }
  return phi;
}

/// a_k with 1 - Σ a_k B^k = (1 - Σ φ_i B^i)(1 - Σ Φ_j B^{js}); index k-1.
inline std::vector<double> expand_ar(const std::vector<double>& phi, const std::vector<double>& sphi, int s) {
  const std::size_t n = phi.size() + sphi.size() * static_cast<std::size_t>(s);
  Poly full(n + 1, 0.0);
  for (std::size_t j = 0; j <= sphi.size(); ++j) {
    const double sj = j == 0 ? 1.0 : -sphi[j - 1];
    for (std::size_t i = 0; i <= phi.size(); ++i) {
      const double fi = i == 0 ? 1.0 : -phi[i - 1];
      full[i + j * static_cast<std::size_t>(s)] += fi * sj;
    }
  }
  std::vector<double> a(n);
  for (std::size_t k = 1; k <= n; ++k) a[k - 1] = -full[k];
  return a;
}

/// m_k with 1 + Σ m_k B^k = (1 + Σ θ_i B^i)(1 + Σ Θ_j B^{js}); index k-1.
inline std::vector<double> expand_ma(const std::vector<double>& theta, const std::vector<double>& stheta, int s) {
  const std::size_t n = theta.size() + stheta.size() * static_cast<std::size_t>(s);
  Poly full(n + 1, 0.0);
  for (std::size_t j = 0; j <= stheta.size(); ++j) {
    const double sj = j == 0 ? 1.0 : stheta[j - 1];
    for (std::size_t i = 0; i <= theta.size(); ++i) {
      const double fi = i == 0 ? 1.0 : theta[i - 1];
      full[i + j * static_cast<std::size_t>(s)] += fi * sj;
    }
  }
  return {full.begin() + 1, full.end()};
}

inline std::vector<double> difference_values(std::span<const double> y, int d, int D, int s) {
  std::vector<double> w(y.begin(), y.end());
  for (int i = 0; i < d; ++i) {
    for (std::size_t t = w.size() - 1; t >= 1; --t) w[t] -= w[t - 1];
    w.erase(w.begin());
  }
  const auto lag = static_cast<std::size_t>(s);
  for (int i = 0; i < D; ++i) {
    for (std::size_t t = w.size() - 1; t >= lag; --t) w[t] -= w[t - lag];
    w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(lag));
  }
  return w;
}

/// Innovations of the ARMA filter; e_t = 0 before the AR lag is available.
inline std::vector<double> css_innovations(std::span<const double> w, const std::vector<double>& a,
                                           const std::vector<double>& m, double mean) {
  const std::size_t start = a.size();
  std::vector<double> e(w.size(), 0.0);
  for (std::size_t t = start; t < w.size(); ++t) {
    double v = w[t] - mean;
    for (std::size_t k = 0; k < a.size(); ++k) v -= a[k] * (w[t - k - 1] - mean);
    for (std::size_t k = 0; k < m.size() && k < t; ++k) v -= m[k] * e[t - k - 1];
    e[t] = v;
  }
  return e;
}

struct UnpackedCoefficients {
  std::vector<double> ar, ma, sar, sma;
  double mean = 0.0;
};

/// Maps the unconstrained parameter vector to coefficients inside the
/// stationarity / invertibility region.
struct SarimaParameterMap {
  SarimaOrders orders;
  double mean_center = 0.0;
  double mean_scale = 1.0;

  UnpackedCoefficients unpack(const Eigen::VectorXd& raw) const {
    UnpackedCoefficients out;
    Eigen::Index i = 0;
    auto take = [&](int n) {
      std::vector<double> r(static_cast<std::size_t>(n));
      for (auto& v : r) v = std::tanh(raw[i++]);
      return r;
    };
    const auto ar_r = take(orders.p);
    const auto ma_r = take(orders.q);
    const auto sar_r = take(orders.P);
    const auto sma_r = take(orders.Q);
    out.ar = pacf_to_ar(ar_r);
    out.sar = pacf_to_ar(sar_r);
    out.ma = pacf_to_ar(ma_r);
    for (auto& v : out.ma) v = -v;
    out.sma = pacf_to_ar(sma_r);
    for (auto& v : out.sma) v = -v;
    out.mean = mean_center + mean_scale * raw[i];
    return out;
  }
};

struct CssFunctor : Eigen::DenseFunctor<double> {
  /// Residuals are the one-step innovations followed by sqrt(penalty) times
  /// each unconstrained coefficient (a weak pull toward zero that only matters
  /// where the likelihood is flat, e.g. along cancelling AR/MA factors).
  CssFunctor(const std::vector<double>& w, SarimaParameterMap map, double penalty)
      : Eigen::DenseFunctor<double>(map.orders.parameter_count(), static_cast<int>(w.size()) -
                                                                      map.orders.ar_lag() +
                                                                      map.orders.coefficient_count()),
        w_(w),
        map_(map),
        penalty_weight_(std::sqrt(penalty)) {}

  Eigen::Index innovation_count() const { return values() - map_.orders.coefficient_count(); }

  int operator()(const Eigen::VectorXd& raw, Eigen::VectorXd& fvec) const {
    const auto c = map_.unpack(raw);
    const auto e = css_innovations(w_, expand_ar(c.ar, c.sar, map_.orders.s), expand_ma(c.ma, c.sma, map_.orders.s),
                                   c.mean);
    const auto start = static_cast<std::size_t>(map_.orders.ar_lag());
    const Eigen::Index n = innovation_count();
    for (Eigen::Index k = 0; k < n; ++k) fvec[k] = e[start + static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < map_.orders.coefficient_count(); ++j) fvec[n + j] = penalty_weight_ * raw[j];
    return 0;
  }

  int df(const Eigen::VectorXd& raw, Eigen::MatrixXd& jac) const {
    constexpr double h = 1e-6;
    Eigen::VectorXd plus(values());
    Eigen::VectorXd minus(values());
    Eigen::VectorXd probe = raw;
    for (Eigen::Index j = 0; j < raw.size(); ++j) {
      probe[j] = raw[j] + h;
      (*this)(probe, plus);
      probe[j] = raw[j] - h;
      (*this)(probe, minus);
      probe[j] = raw[j];
      jac.col(j) = (plus - minus) / (2.0 * h);
    }
    return 0;
  }

 private:
  const std::vector<double>& w_;
  SarimaParameterMap map_;
  double penalty_weight_ = 0.0;
};

inline std::vector<int> all_zero_hours(const HourlySeries& series) {
  std::array<bool, kHoursPerDay> zero{};
  zero.fill(true);
  const int h0 = series.start().hour_of_day();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] != 0.0) zero[static_cast<std::size_t>((h0 + static_cast<int>(i)) % kHoursPerDay)] = false;
  }
  std::vector<int> hours;
  if (series.size() < static_cast<std::size_t>(kHoursPerDay)) return hours;
  for (int h = 0; h < kHoursPerDay; ++h) {
    if (zero[static_cast<std::size_t>(h)]) hours.push_back(h);
  }
  return hours;
}

/// Pre-computed filter state over a history, reused for many forecast origins.
class SarimaFilter {
 public:
  SarimaFilter(const SarimaModel& model, std::span<const double> y) : model_(model), y_(y.begin(), y.end()) {
    const auto& o = model.orders;
    w_ = difference_values(y, o.d, o.D, o.s);
    a_ = expand_ar(model.ar_coeffs, model.seasonal_ar_coeffs, o.s);
    m_ = expand_ma(model.ma_coeffs, model.seasonal_ma_coeffs, o.s);
    e_ = css_innovations(w_, a_, m_, model.intercept);
    delta_ = difference_polynomial(o.d, o.D, o.s);
  }

  /// Forecast `horizon` values after the first `origin` observations of y.
  std::vector<double> forecast_from(std::size_t origin, std::size_t horizon) const {
    const auto lag = static_cast<std::size_t>(model_.orders.diff_lag());
    const std::size_t w_origin = origin - lag;
    std::vector<double> w(w_.begin(), w_.begin() + static_cast<std::ptrdiff_t>(w_origin));
    std::vector<double> e(e_.begin(), e_.begin() + static_cast<std::ptrdiff_t>(w_origin));
    std::vector<double> y(y_.begin(), y_.begin() + static_cast<std::ptrdiff_t>(origin));
    const double mu = model_.intercept;
    std::vector<double> out(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      const std::size_t t = w.size();
      double v = mu;
      for (std::size_t k = 0; k < a_.size(); ++k) v += a_[k] * (w[t - k - 1] - mu);
      for (std::size_t k = 0; k < m_.size() && k < t; ++k) v += m_[k] * e[t - k - 1];
      w.push_back(v);
      e.push_back(0.0);
      double level = v;
      const std::size_t ty = y.size();
      for (std::size_t i = 1; i < delta_.size(); ++i) level -= delta_[i] * y[ty - i];
      y.push_back(level);
      out[h] = level;
    }
    return out;
  }

 private:
  const SarimaModel& model_;
  std::vector<double> y_;
  std::vector<double> w_;
  std::vector<double> a_;
  std::vector<double> m_;
  std::vector<double> e_;
  Poly delta_;
};

inline void apply_zero_hours(const SarimaModel& model, CalendarHour first, std::vector<double>& values) {
  if (model.zero_hours.empty()) return;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int h = (first + static_cast<std::int64_t>(i)).hour_of_day();
    if (std::binary_search(model.zero_hours.begin(), model.zero_hours.end(), h)) values[i] = 0.0;
  }
}

}  // namespace detail

/// Ordinary differencing d times, then lag-s differencing D times.
inline HourlySeries difference(const HourlySeries& series, int d, int D, int s) {
  detail::require(d >= 0 && D >= 0 && s >= 1, "difference: invalid orders");
  const auto lag = static_cast<std::size_t>(d + D * s);
  if (series.size() <= lag) throw InvalidArgument("difference: series too short for the requested orders");
  return HourlySeries{series.start() + static_cast<std::int64_t>(lag),
                      detail::difference_values(series.values(), d, D, s), series.unit()};
}

/// Inverse of `difference`: rebuilds the series from its first d + D·s values.
inline HourlySeries undifference(const HourlySeries& differenced, std::span<const double> prefix, int d, int D,
                                 int s) {
  const auto delta = detail::difference_polynomial(d, D, s);
  detail::require(prefix.size() == delta.size() - 1, "undifference: prefix must hold d + D*s values");
  std::vector<double> y(prefix.begin(), prefix.end());
  y.reserve(prefix.size() + differenced.size());
  for (double w : differenced.values()) {
    double v = w;
    const std::size_t t = y.size();
    for (std::size_t i = 1; i < delta.size(); ++i) v -= delta[i] * y[t - i];
    y.push_back(v);
  }
  return HourlySeries{differenced.start() - static_cast<std::int64_t>(prefix.size()), std::move(y),
                      differenced.unit()};
}

struct FitOptions {
  double gradient_tolerance = 1e-6;
  int max_iterations = 500;
  /// Weight of the squared unconstrained coefficients, in units of the
  /// differenced series' variance (one extra "observation" per unit).
  double coefficient_penalty = 20.0;
};

/// Conditional-sum-of-squares fit. Non-convergence is reported through
/// `SarimaModel::converged`, not thrown.
inline SarimaModel fit(const HourlySeries& series, const SarimaOrders& orders, const FitOptions& options = {}) {
  orders.validate();
  const auto n = series.size();
  if (n < static_cast<std::size_t>(10 * orders.parameter_count())) {
    throw InvalidArgument("fit: series shorter than 10x the parameter count");
  }
  if (orders.D > 0 && n < static_cast<std::size_t>(3 * orders.s)) {
    throw InvalidArgument("fit: seasonal differencing needs at least three full seasons");
  }
  const auto w = detail::difference_values(series.values(), orders.d, orders.D, orders.s);
  if (w.size() <= static_cast<std::size_t>(orders.ar_lag() + orders.parameter_count())) {
    throw InvalidArgument("fit: differenced series too short for the AR lag");
  }

  const double mean_w = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double var_w = 0.0;
  for (double v : w) var_w += (v - mean_w) * (v - mean_w);
  var_w /= static_cast<double>(w.size());
  const double sd_w = var_w > 0.0 ? std::sqrt(var_w) : 1.0;

  detail::SarimaParameterMap map{orders, mean_w, sd_w};
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(orders.parameter_count());

  detail::CssFunctor functor(w, map, var_w * options.coefficient_penalty);
  int iterations = 0;
  if (var_w > 0.0) {
    Eigen::LevenbergMarquardt<detail::CssFunctor> lm(functor);
    lm.setMaxfev(options.max_iterations);
    lm.setXtol(1e-12);
    lm.setFtol(1e-14);
    lm.minimize(raw);
    iterations = static_cast<int>(lm.iterations());
  }

  const auto c = map.unpack(raw);
  SarimaModel model;
  model.orders = orders;
  model.ar_coeffs = c.ar;
  model.ma_coeffs = c.ma;
  model.seasonal_ar_coeffs = c.sar;
  model.seasonal_ma_coeffs = c.sma;
  model.intercept = var_w > 0.0 ? c.mean : mean_w;
  model.iterations = iterations;

  Eigen::VectorXd resid(functor.values());
  functor(raw, resid);
  const double count = static_cast<double>(functor.innovation_count());
  model.residual_variance = resid.head(functor.innovation_count()).squaredNorm() / count;

  // Gradient of the scale-free penalized objective (SSE + penalty) / (count * var_w).
  if (var_w > 0.0) {
    Eigen::MatrixXd jac(functor.values(), functor.inputs());
    functor.df(raw, jac);
    const Eigen::VectorXd grad = 2.0 * jac.transpose() * resid / (count * var_w);
    model.gradient_norm = grad.norm();
  }
  model.converged = model.gradient_norm <= options.gradient_tolerance;

  const auto tail = static_cast<std::size_t>(std::min<int>(orders.required_history() + orders.ma_lag(),
                                                           static_cast<int>(n)));
  model.training_tail.assign(series.values().end() - static_cast<std::ptrdiff_t>(tail), series.values().end());
  model.zero_hours = detail::all_zero_hours(series);
  return model;
}

/// Iterated one-step expectation with future shocks set to zero.
inline HourlySeries forecast(const SarimaModel& model, const HourlySeries& history, std::size_t horizon) {
  detail::require(horizon >= 1, "forecast: horizon must be positive");
  if (history.size() < static_cast<std::size_t>(model.orders.required_history())) {
    throw InvalidArgument("forecast: history shorter than the model's maximum lag");
  }
  detail::SarimaFilter filter(model, history.values());
  auto values = filter.forecast_from(history.size(), horizon);
  detail::apply_zero_hours(model, history.end(), values);
  return HourlySeries{history.end(), std::move(values), history.unit()};
}

/// Row i holds actual - forecast for one historical day, where the forecast
/// uses only data before that day's midnight. Days without enough prior data
/// for the model lags are skipped.
inline Eigen::MatrixXd residual_matrix(const SarimaModel& model, const HourlySeries& history,
                                       std::size_t min_days = 30) {
  constexpr auto kDay = static_cast<std::size_t>(kHoursPerDay);
  detail::require(history.start().is_midnight(), "residual_matrix: history must start at midnight");
  detail::require(history.size() % kDay == 0, "residual_matrix: history length must be a multiple of 24");
  const std::size_t days = history.size() / kDay;
  const auto need = static_cast<std::size_t>(model.orders.required_history());
  const std::size_t first_day = (need + kDay - 1) / kDay;
  if (days < first_day + min_days) {
    throw InvalidArgument("residual_matrix: insufficient history (need " + std::to_string(min_days) +
                          " forecastable days)");
  }
  detail::SarimaFilter filter(model, history.values());
  Eigen::MatrixXd errors(static_cast<Eigen::Index>(days - first_day), kHoursPerDay);
  for (std::size_t day = first_day; day < days; ++day) {
    const std::size_t origin = day * kDay;
    auto fc = filter.forecast_from(origin, kDay);
    detail::apply_zero_hours(model, history.start() + static_cast<std::int64_t>(origin), fc);
    for (std::size_t h = 0; h < kDay; ++h) {
      errors(static_cast<Eigen::Index>(day - first_day), static_cast<Eigen::Index>(h)) =
          history[origin + h] - fc[h];
    }
  }
  return errors;
}

}  // namespace aggsim
