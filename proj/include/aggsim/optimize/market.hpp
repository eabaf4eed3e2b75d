#pragma once

// Day-ahead and real-time stochastic market problems of the aggregator, and
// the single-scenario "yesterday repeats" baseline.
//
// Sign conventions: c (DA commitment) and x (RT bid) are positive when
// selling. Storage evolves as s_{t+1} = s_t + η(-c_t + v_t - d_t - x_t).
// Absolute values |c_t + x_t| use epigraph variables u ≥ ±(c_t + x_t).

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggsim/core.hpp"
#include "aggsim/optimize/qp.hpp"
#include "aggsim/optimize/solver.hpp"
#include "aggsim/scenario.hpp"

namespace aggsim {

/// Index map of the DA problem: c_1..c_24, then per scenario x(24), s(25), u(24).
struct DaLayout {
  static constexpr int kBlock = 3 * kHoursPerDay + 1;
  int scenarios = 0;

  int variable_count() const { return kHoursPerDay + scenarios * kBlock; }
  int c(int t) const { return t - 1; }
  int x(int k, int t) const { return kHoursPerDay + k * kBlock + (t - 1); }
  int s(int k, int t) const { return kHoursPerDay + k * kBlock + kHoursPerDay + (t - 1); }
  int u(int k, int t) const { return kHoursPerDay + k * kBlock + 2 * kHoursPerDay + 1 + (t - 1); }
};

/// Index map of the RT problem at hour t: x_t, u_t, then per scenario
/// s(t+1..25), x(t+1..24), u(t+1..24). At t = 24 a single s_25 follows.
struct RtLayout {
  int hour = 1;
  int scenarios = 0;

  int future_hours() const { return kHoursPerDay - hour; }
  int block() const { return 3 * future_hours() + 1; }
  int variable_count() const { return hour == kHoursPerDay ? 3 : 2 + scenarios * block(); }
  int x_now() const { return 0; }
  int u_now() const { return 1; }
  int s(int k, int i) const {
    return hour == kHoursPerDay ? 2 : 2 + k * block() + (i - hour - 1);
  }
  int x(int k, int i) const { return 2 + k * block() + future_hours() + 1 + (i - hour - 1); }
  int u(int k, int i) const { return 2 + k * block() + 2 * future_hours() + 1 + (i - hour - 1); }
};

struct DaProblem {
  QuadraticProgram qp;
  DaLayout layout;
};

struct RtProblem {
  QuadraticProgram qp;
  RtLayout layout;
};

/// Realized hour-t values seen by the RT decision.
struct HourObservation {
  double rt_price = 0.0;
  double pv = 0.0;
  double demand = 0.0;
};

/// Realizations of the previous day, used by the naive baseline.
struct DayRealization {
  std::array<double, kHoursPerDay> rt_price{};
  std::array<double, kHoursPerDay> pv{};
  std::array<double, kHoursPerDay> demand{};
};

namespace detail {

class QpAssembler {
 public:
  explicit QpAssembler(int n) : n_(n), q_(Eigen::VectorXd::Zero(n)) {}

  void linear(int i, double v) { q_[i] += v; }
  void quadratic(int i, int j, double v) {
    p_.emplace_back(i, j, v);
    if (i != j) p_.emplace_back(j, i, v);
  }
  /// (α)·(z_j - z_i)² term.
  void squared_difference(int i, int j, double weight) {
    quadratic(i, i, 2.0 * weight);
    quadratic(j, j, 2.0 * weight);
    quadratic(i, j, -2.0 * weight);
  }
  int equality(std::initializer_list<std::pair<int, double>> terms, double rhs) {
    for (const auto& [j, v] : terms) a_.emplace_back(me_, j, v);
    b_.push_back(rhs);
    return me_++;
  }
  int inequality(std::initializer_list<std::pair<int, double>> terms, double rhs) {
    for (const auto& [j, v] : terms) g_.emplace_back(mi_, j, v);
    h_.push_back(rhs);
    return mi_++;
  }
  void constant(double v) { constant_ += v; }

  QuadraticProgram finish(std::vector<VariableLabel> labels) {
    QuadraticProgram qp;
    qp.P.resize(n_, n_);
    qp.P.setFromTriplets(p_.begin(), p_.end());
    qp.q = q_;
    qp.constant = constant_;
    qp.A.resize(me_, n_);
    qp.A.setFromTriplets(a_.begin(), a_.end());
    qp.b = Eigen::Map<Eigen::VectorXd>(b_.data(), me_);
    qp.G.resize(mi_, n_);
    qp.G.setFromTriplets(g_.begin(), g_.end());
    qp.h = Eigen::Map<Eigen::VectorXd>(h_.data(), mi_);
    qp.labels = std::move(labels);
    return qp;
  }

 private:
  int n_;
  int me_ = 0;
  int mi_ = 0;
  Eigen::VectorXd q_;
  double constant_ = 0.0;
  Triplets p_, a_, g_;
  std::vector<double> b_, h_;
};

inline void require_joint(const JointScenarioSet& joint, int first_hour) {
  detail::require(joint.size() > 0, "market problem: empty scenario set");
  detail::require(joint.first_hour == first_hour &&
                      joint.horizon() == static_cast<std::size_t>(kHoursPerDay - first_hour + 1),
                  "market problem: scenario horizon does not match the decision stage");
  detail::require(std::abs(joint.total_probability() - 1.0) <= kProbabilityTolerance,
                  "market problem: scenario probabilities must sum to one");
}

}  // namespace detail

/// Two-stage DA problem over the joint {rt_price, pv, demand} scenarios.
/// `initial_storage` overrides agg.battery.s_init when given.
inline DaProblem build_da(const AggregatorSpec& agg, std::span<const double> da_prices, const JointScenarioSet& joint,
                          std::optional<double> initial_storage = std::nullopt) {
  agg.validate();
  detail::require(da_prices.size() == static_cast<std::size_t>(kHoursPerDay), "build_da: need 24 DA prices");
  detail::require_joint(joint, 1);
  const double s1 = initial_storage.value_or(agg.battery.s_init);
  detail::require(s1 >= agg.battery.s_min - 1e-6 && s1 <= agg.battery.s_max + 1e-6,
                  "build_da: initial storage outside the battery bounds");

  const DaLayout L{static_cast<int>(joint.size())};
  detail::QpAssembler qp(L.variable_count());
  std::vector<VariableLabel> labels(static_cast<std::size_t>(L.variable_count()));
  const double eta = agg.battery.eta;

  for (int t = 1; t <= kHoursPerDay; ++t) {
    labels[static_cast<std::size_t>(L.c(t))] = {VarKind::commitment, -1, t};
    qp.linear(L.c(t), -da_prices[static_cast<std::size_t>(t - 1)]);
    qp.inequality({{L.c(t), 1.0}}, agg.c_max);
    qp.inequality({{L.c(t), -1.0}}, agg.c_max);
  }

  for (int k = 0; k < L.scenarios; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double eps = joint.scenarios[ku].probability;
    const auto price = joint.values(ku, Quantity::rt_price);
    const auto pv = joint.values(ku, Quantity::pv);
    const auto demand = joint.values(ku, Quantity::demand);

    qp.equality({{L.s(k, 1), 1.0}}, s1);
    labels[static_cast<std::size_t>(L.s(k, 1))] = {VarKind::storage, k, 1};
    for (int t = 1; t <= kHoursPerDay; ++t) {
      const auto tu = static_cast<std::size_t>(t - 1);
      labels[static_cast<std::size_t>(L.x(k, t))] = {VarKind::rt_bid, k, t};
      labels[static_cast<std::size_t>(L.s(k, t + 1))] = {VarKind::storage, k, t + 1};
      labels[static_cast<std::size_t>(L.u(k, t))] = {VarKind::abs_slack, k, t};

      qp.linear(L.x(k, t), -eps * price[tu]);
      qp.linear(L.u(k, t), eps * agg.beta);
      qp.squared_difference(L.s(k, t), L.s(k, t + 1), eps * agg.alpha);

      qp.equality({{L.s(k, t + 1), 1.0}, {L.s(k, t), -1.0}, {L.c(t), eta}, {L.x(k, t), eta}},
                  eta * (pv[tu] - demand[tu]));
      qp.inequality({{L.s(k, t + 1), 1.0}}, agg.battery.s_max);
      qp.inequality({{L.s(k, t + 1), -1.0}}, -agg.battery.s_min);
      qp.inequality({{L.c(t), 1.0}, {L.x(k, t), 1.0}, {L.u(k, t), -1.0}}, 0.0);
      qp.inequality({{L.c(t), -1.0}, {L.x(k, t), -1.0}, {L.u(k, t), -1.0}}, 0.0);
    }
  }
  return {qp.finish(std::move(labels)), L};
}

/// RT problem at hour t: x_t is decided with hour-t realizations known;
/// hours t+1..24 are covered by the joint scenarios (empty at t = 24).
/// The hour-t storage swing and network use are charged together with the
/// expected cost of the remaining hours.
inline RtProblem build_rt(const AggregatorSpec& agg, int t, double s_t, const BidSchedule& commitments,
                          const HourObservation& observed, const JointScenarioSet& joint) {
  agg.validate();
  detail::require(t >= 1 && t <= kHoursPerDay, "build_rt: hour must lie in 1..24");
  if (!(s_t >= agg.battery.s_min - 1e-6 && s_t <= agg.battery.s_max + 1e-6)) {
    throw InvalidArgument("build_rt: storage state " + std::to_string(s_t) + " at hour " + std::to_string(t) +
                          " is outside the battery bounds");
  }
  if (t < kHoursPerDay) detail::require_joint(joint, t + 1);

  const RtLayout L{t, t < kHoursPerDay ? static_cast<int>(joint.size()) : 0};
  detail::QpAssembler qp(L.variable_count());
  std::vector<VariableLabel> labels(static_cast<std::size_t>(L.variable_count()));
  const double eta = agg.battery.eta;
  const auto& c = commitments.commitments;
  const double c_t = c[static_cast<std::size_t>(t - 1)];
  const double hour_t_rhs = s_t + eta * (-c_t + observed.pv - observed.demand);

  labels[0] = {VarKind::rt_bid, -1, t};
  labels[1] = {VarKind::abs_slack, -1, t};
  qp.linear(L.x_now(), -observed.rt_price);
  qp.linear(L.u_now(), agg.beta);
  qp.inequality({{L.x_now(), 1.0}, {L.u_now(), -1.0}}, -c_t);
  qp.inequality({{L.x_now(), -1.0}, {L.u_now(), -1.0}}, c_t);

  // α ε (s^k_{t+1} - s_t)² with s_t fixed.
  auto hour_t_swing = [&](int var, double eps) {
    qp.quadratic(var, var, 2.0 * agg.alpha * eps);
    qp.linear(var, -2.0 * agg.alpha * eps * s_t);
    qp.constant(agg.alpha * eps * s_t * s_t);
  };

  if (t == kHoursPerDay) {
    labels[2] = {VarKind::storage, -1, kHoursPerDay + 1};
    hour_t_swing(2, 1.0);
    qp.equality({{2, 1.0}, {L.x_now(), eta}}, hour_t_rhs);
    qp.inequality({{2, 1.0}}, agg.battery.s_max);
    qp.inequality({{2, -1.0}}, -agg.battery.s_min);
    return {qp.finish(std::move(labels)), L};
  }

  for (int k = 0; k < L.scenarios; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double eps = joint.scenarios[ku].probability;
    const auto price = joint.values(ku, Quantity::rt_price);
    const auto pv = joint.values(ku, Quantity::pv);
    const auto demand = joint.values(ku, Quantity::demand);

    labels[static_cast<std::size_t>(L.s(k, t + 1))] = {VarKind::storage, k, t + 1};
    hour_t_swing(L.s(k, t + 1), eps);
    qp.equality({{L.s(k, t + 1), 1.0}, {L.x_now(), eta}}, hour_t_rhs);
    qp.inequality({{L.s(k, t + 1), 1.0}}, agg.battery.s_max);
    qp.inequality({{L.s(k, t + 1), -1.0}}, -agg.battery.s_min);

    for (int i = t + 1; i <= kHoursPerDay; ++i) {
      const auto iu = static_cast<std::size_t>(i - t - 1);
      const double c_i = c[static_cast<std::size_t>(i - 1)];
      labels[static_cast<std::size_t>(L.x(k, i))] = {VarKind::rt_bid, k, i};
      labels[static_cast<std::size_t>(L.s(k, i + 1))] = {VarKind::storage, k, i + 1};
      labels[static_cast<std::size_t>(L.u(k, i))] = {VarKind::abs_slack, k, i};

      qp.linear(L.x(k, i), -eps * price[iu]);
      qp.linear(L.u(k, i), eps * agg.beta);
      qp.squared_difference(L.s(k, i), L.s(k, i + 1), eps * agg.alpha);

      qp.equality({{L.s(k, i + 1), 1.0}, {L.s(k, i), -1.0}, {L.x(k, i), eta}}, eta * (-c_i + pv[iu] - demand[iu]));
      qp.inequality({{L.s(k, i + 1), 1.0}}, agg.battery.s_max);
      qp.inequality({{L.s(k, i + 1), -1.0}}, -agg.battery.s_min);
      qp.inequality({{L.x(k, i), 1.0}, {L.u(k, i), -1.0}}, -c_i);
      qp.inequality({{L.x(k, i), -1.0}, {L.u(k, i), -1.0}}, c_i);
    }
  }
  return {qp.finish(std::move(labels)), L};
}

/// Solves and throws SolverFailure (with a problem dump) unless optimal.
inline Solution solve_or_throw(const QuadraticProgram& qp, const SolverOptions& options, const std::string& context) {
  Solution sol = solve(qp, options);
  if (sol.status != SolveStatus::optimal) {
    throw SolverFailure(context + ": solver returned " + to_string(sol.status) + " (max KKT residual " +
                            std::to_string(sol.residuals.max()) + ")",
                        matrix_market_string(qp));
  }
  return sol;
}

/// Commitments of a solved DA problem, clipped onto the bid cap to remove
/// solver-tolerance overshoot.
inline BidSchedule extract_schedule(const DaProblem& problem, const Solution& sol, double c_max) {
  BidSchedule out;
  for (int t = 1; t <= kHoursPerDay; ++t) {
    out.commitments[static_cast<std::size_t>(t - 1)] = std::clamp(sol.z[problem.layout.c(t)], -c_max, c_max);
  }
  return out;
}

inline double extract_rt_bid(const RtProblem& problem, const Solution& sol) { return sol.z[problem.layout.x_now()]; }

/// Joint set holding one scenario: hours first_hour..24 of `day`, probability 1.
inline JointScenarioSet single_scenario(const DayRealization& day, int first_hour) {
  const auto from = static_cast<std::size_t>(first_hour - 1);
  auto tail = [from](const std::array<double, kHoursPerDay>& a) { return std::vector<double>(a.begin() + static_cast<std::ptrdiff_t>(from), a.end()); };
  JointScenarioSet set;
  set.quantities = {Quantity::rt_price, Quantity::pv, Quantity::demand};
  set.first_hour = first_hour;
  set.scenarios.push_back({{tail(day.rt_price), tail(day.pv), tail(day.demand)}, 1.0});
  return set;
}

/// Case-2 DA decision: yesterday's realizations are taken as certain.
inline BidSchedule naive_baseline_da(const AggregatorSpec& agg, std::span<const double> da_prices,
                                     const DayRealization& yesterday, std::optional<double> initial_storage = std::nullopt,
                                     const SolverOptions& options = {}) {
  const auto problem = build_da(agg, da_prices, single_scenario(yesterday, 1), initial_storage);
  const auto sol = solve_or_throw(problem.qp, options, "naive DA baseline");
  return extract_schedule(problem, sol, agg.c_max);
}

/// Case-2 RT decision at hour t with yesterday's hours t+1..24 as the single scenario.
inline double naive_baseline_rt(const AggregatorSpec& agg, int t, double s_t, const BidSchedule& commitments,
                                const HourObservation& observed, const DayRealization& yesterday,
                                const SolverOptions& options = {}) {
  JointScenarioSet joint;
  if (t < kHoursPerDay) joint = single_scenario(yesterday, t + 1);
  const auto problem = build_rt(agg, t, s_t, commitments, observed, joint);
  const auto sol = solve_or_throw(problem.qp, options, "naive RT baseline at hour " + std::to_string(t));
  return extract_rt_bid(problem, sol);
}

}  // namespace aggsim
