#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "aggsim/random.hpp"
#include "aggsim/scenario.hpp"

using namespace aggsim;

namespace {

GaussianErrorModel model_of(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
  GaussianErrorModel m{std::move(mu), std::move(sigma), {}};
  for (Eigen::Index i = 0; i < m.dim(); ++i) m.hour_labels.push_back(static_cast<int>(i) + 1);
  return m;
}

// Stationary AR(1) covariance: sd² ρ^|i-j|.
Eigen::MatrixXd ar1_cov(int dim, double rho, double sd) {
  Eigen::MatrixXd s(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s(i, j) = sd * sd * std::pow(rho, std::abs(i - j));
  return s;
}

ScenarioSet random_set(RandomStream& rng, std::size_t n, std::size_t horizon) {
  ScenarioSet set{Quantity::rt_price, 1, {}};
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = 0.1 + rng.uniform());
  for (std::size_t i = 0; i < n; ++i) {
    Scenario s;
    for (std::size_t h = 0; h < horizon; ++h) s.values.push_back(rng.normal());
    s.probability = w[i] / total;
    set.scenarios.push_back(s);
  }
  // Exact unit sum.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) rest -= set.scenarios[i].probability;
  set.scenarios.back().probability = rest;
  return set;
}

// Σ_{deleted} p_i · min over kept of squared distance, straight from the definition.
double kept_objective(const ScenarioSet& set, const std::vector<bool>& keep) {
  double z = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (keep[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < set.size(); ++u) {
      if (!keep[u]) continue;
      double d = 0.0;
      for (std::size_t h = 0; h < set.horizon(); ++h) {
        const double e = set.scenarios[i].values[h] - set.scenarios[u].values[h];
        d += e * e;
      }
      best = std::min(best, d);
    }
    z += set.scenarios[i].probability * best;
  }
  return z;
}

double exhaustive_optimum(const ScenarioSet& set, std::size_t k) {
  const std::size_t n = set.size();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<bool> keep(n);
    for (std::size_t i = 0; i < n; ++i) keep[i] = (mask >> i) & 1u;
    best = std::min(best, kept_objective(set, keep));
  }
  return best;
}

// Textbook greedy: recompute every z_j from scratch each pass.
std::vector<bool> naive_greedy(const ScenarioSet& set, std::size_t k) {
  const std::size_t n = set.size();
  std::vector<bool> deleted(n, false);
  for (std::size_t pass = 0; pass < n - k; ++pass) {
    std::size_t best = n;
    double best_z = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (deleted[j]) continue;
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!deleted[i] && i != j) continue;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < n; ++u) {
          if (deleted[u] || u == j) continue;
          m = std::min(m, distance(set.scenarios[i], set.scenarios[u]));
        }
        z += set.scenarios[i].probability * m;
      }
      if (z < best_z) {
        best_z = z;
        best = j;
      }
    }
    deleted[best] = true;
  }
  std::vector<bool> keep(n);
  for (std::size_t i = 0; i < n; ++i) keep[i] = !deleted[i];
  return keep;
}

std::vector<bool> kept_mask(const ScenarioSet& input, const ScenarioSet& reduced) {
  std::vector<bool> keep(input.size(), false);
  for (const auto& r : reduced.scenarios) {
    bool found = false;
    for (std::size_t i = 0; i < input.size() && !found; ++i) {
      if (!keep[i] && input.scenarios[i].values == r.values) keep[i] = found = true;
    }
    EXPECT_TRUE(found) << "reduced scenario is not a member of the input";
  }
  return keep;
}

}  // namespace

TEST(GenerateDa, ZeroNoiseCopiesForecast) {
  std::vector<double> fc(24);
  for (int h = 0; h < 24; ++h) fc[static_cast<std::size_t>(h)] = 20.0 + h;
  const auto set = generate_da(fc, model_of(Eigen::VectorXd::Zero(24), Eigen::MatrixXd::Zero(24, 24)), 7, 1,
                               Quantity::rt_price);
  ASSERT_EQ(set.size(), 7u);
  for (const auto& s : set.scenarios) EXPECT_EQ(s.values, fc);
}

TEST(GenerateDa, NightPvStaysZero) {
  std::vector<double> fc(24, 0.0);
  for (int h = 8; h < 18; ++h) fc[static_cast<std::size_t>(h)] = 1.0;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(24, 24);
  for (int h = 8; h < 18; ++h) s(h, h) = 0.04;
  const auto set = generate_da(fc, model_of(Eigen::VectorXd::Zero(24), s), 50, 3, Quantity::pv);
  for (const auto& sc : set.scenarios) {
    for (int h = 0; h < 24; ++h) {
      if (h < 8 || h >= 18) {
        EXPECT_EQ(sc.values[static_cast<std::size_t>(h)], 0.0);
      }
      EXPECT_GE(sc.values[static_cast<std::size_t>(h)], 0.0);
    }
  }
}

TEST(GenerateDa, FiftyEquallyLikely) {
  const auto set = generate_da(std::vector<double>(24, 1.0),
                               model_of(Eigen::VectorXd::Zero(24), ar1_cov(24, 0.5, 1.0)), 50, 9, Quantity::demand);
  ASSERT_EQ(set.size(), 50u);
  for (const auto& s : set.scenarios) EXPECT_DOUBLE_EQ(s.probability, 0.02);
  EXPECT_NO_THROW(set.validate());
}

TEST(GenerateDa, SameSeedSameSet) {
  const auto m = model_of(Eigen::VectorXd::Zero(24), ar1_cov(24, 0.5, 1.0));
  const std::vector<double> fc(24, 30.0);
  EXPECT_EQ(generate_da(fc, m, 10, 4, Quantity::rt_price).scenarios,
            generate_da(fc, m, 10, 4, Quantity::rt_price).scenarios);
}

TEST(GenerateDa, RejectsWrongDimension) {
  EXPECT_THROW(generate_da(std::vector<double>(23, 0.0), model_of(Eigen::VectorXd::Zero(24), Eigen::MatrixXd::Zero(24, 24)),
                           5, 1, Quantity::pv),
               InvalidArgument);
}

TEST(GenerateRt, BlockIndependentZeroErrorMatchesMarginalTail) {
  // Diagonal covariance: observing hours 1..t says nothing about the rest.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(24, 24);
  for (int h = 0; h < 24; ++h) s(h, h) = 1.0 + 0.1 * h;
  const auto m = model_of(Eigen::VectorXd::Zero(24), s);
  std::vector<double> fc(24, 5.0);
  const std::vector<double> realized(10, 5.0);
  const auto set = generate_rt(fc, m, realized, 40000, 2, Quantity::rt_price);
  EXPECT_EQ(set.first_hour, 11);
  ASSERT_EQ(set.horizon(), 14u);
  for (std::size_t h = 0; h < 14; ++h) {
    double mean = 0.0;
    double sq = 0.0;
    for (const auto& sc : set.scenarios) {
      mean += sc.values[h];
      sq += sc.values[h] * sc.values[h];
    }
    mean /= 40000.0;
    const double var = sq / 40000.0 - mean * mean;
    const double truth = 1.0 + 0.1 * static_cast<double>(h + 10);
    EXPECT_NEAR(mean, 5.0, 4.0 * std::sqrt(truth / 40000.0));
    EXPECT_NEAR(var, truth, 0.05 * truth);
  }
}

TEST(GenerateRt, PositiveErrorPullsNextHourUp) {
  const double rho = 0.7;
  const double sd = 2.0;
  const auto m = model_of(Eigen::VectorXd::Zero(24), ar1_cov(24, rho, sd));
  const std::vector<double> fc(24, 10.0);
  std::vector<double> realized(6, 10.0);
  realized.back() = 10.0 + 2.0 * sd;
  const auto set = generate_rt(fc, m, realized, 20000, 5, Quantity::rt_price);
  double mean = 0.0;
  for (const auto& sc : set.scenarios) mean += sc.values[0];
  mean /= 20000.0;
  // AR(1) is Markov: E[X_{t+1} | X_1..X_t] = ρ·X_t, variance sd²(1 - ρ²).
  const double expected = 10.0 + rho * 2.0 * sd;
  EXPECT_GT(mean, 10.0);
  EXPECT_NEAR(mean, expected, 4.0 * sd * std::sqrt((1.0 - rho * rho) / 20000.0));
}

TEST(GenerateRt, HourTwentyThreeGivesScalars) {
  const auto m = model_of(Eigen::VectorXd::Zero(24), ar1_cov(24, 0.5, 1.0));
  const auto set = generate_rt(std::vector<double>(24, 0.0), m, std::vector<double>(23, 0.0), 5, 1, Quantity::pv);
  EXPECT_EQ(set.first_hour, 24);
  EXPECT_EQ(set.horizon(), 1u);
}

TEST(GenerateRt, HourTwentyFourIsAnEmptyHorizon) {
  const auto m = model_of(Eigen::VectorXd::Zero(24), ar1_cov(24, 0.5, 1.0));
  EXPECT_THROW(generate_rt(std::vector<double>(24, 0.0), m, std::vector<double>(24, 0.0), 5, 1, Quantity::pv),
               InvalidArgument);
}

TEST(Distance, Examples) {
  const std::vector<double> a{1, 2}, b{1, 3};
  EXPECT_EQ(distance(a, a), 0.0);
  EXPECT_EQ(distance(a, b), 1.0);
  EXPECT_THROW(distance(a, std::vector<double>{1}), InvalidArgument);
  RandomStream rng(4);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    EXPECT_EQ(distance(x, y), distance(y, x));
  }
}

TEST(Reduce, KeepAllIsIdentity) {
  RandomStream rng(1);
  const auto set = random_set(rng, 6, 4);
  EXPECT_EQ(reduce(set, 6).scenarios, set.scenarios);
}

TEST(Reduce, DuplicateIsDeletedFirst) {
  ScenarioSet set{Quantity::pv, 1, {{{0.0, 0.0}, 1.0 / 3}, {{0.0, 0.0}, 1.0 / 3}, {{3.0, 1.0}, 1.0 / 3}}};
  const auto out = reduce(set, 2);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.scenarios[0].values, (std::vector<double>{0.0, 0.0}));
  EXPECT_NEAR(out.scenarios[0].probability, 2.0 / 3, 1e-15);
  EXPECT_EQ(out.scenarios[1].values, (std::vector<double>{3.0, 1.0}));
  // Deleting a duplicate costs nothing; no other single deletion does.
  std::vector<bool> keep{true, false, true};
  EXPECT_EQ(kept_objective(set, keep), exhaustive_optimum(set, 2));
}

TEST(Reduce, FiftyToFive) {
  const auto m = model_of(Eigen::VectorXd::Zero(24), ar1_cov(24, 0.8, 3.0));
  const auto raw = generate_da(std::vector<double>(24, 30.0), m, 50, 12, Quantity::rt_price);
  const auto out = reduce(raw, 5);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_NEAR(out.total_probability(), 1.0, 1e-9);
  for (const auto& s : out.scenarios) EXPECT_GE(s.probability, 0.02 - 1e-15);
  kept_mask(raw, out);
}

TEST(Reduce, MatchesGreedyFromDefinition) {
  RandomStream rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform() * 6);
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - 1));
    const auto set = random_set(rng, n, 3);
    const auto out = reduce(set, k);
    EXPECT_EQ(out.size(), k);
    EXPECT_NEAR(out.total_probability(), 1.0, 1e-9);
    EXPECT_EQ(kept_mask(set, out), naive_greedy(set, k)) << "trial " << trial;
  }
}

TEST(Reduce, SingleDeletionIsOptimal) {
  RandomStream rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 7);
    const auto set = random_set(rng, n, 4);
    const auto out = reduce(set, n - 1);
    EXPECT_NEAR(kept_objective(set, kept_mask(set, out)), exhaustive_optimum(set, n - 1), 1e-12);
  }
}

TEST(Reduce, ProbabilityGoesToNearestKept) {
  RandomStream rng(30);
  const auto set = random_set(rng, 8, 2);
  const auto out = reduce(set, 3);
  const auto keep = kept_mask(set, out);
  std::vector<double> expected(out.size(), 0.0);
  std::vector<std::size_t> kept_index;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (keep[i]) kept_index.push_back(i);
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::size_t nearest = 0;
    for (std::size_t r = 0; r < kept_index.size(); ++r) {
      if (distance(set.scenarios[i], set.scenarios[kept_index[r]]) <
          distance(set.scenarios[i], set.scenarios[kept_index[nearest]]))
        nearest = r;
    }
    expected[nearest] += set.scenarios[i].probability;
  }
  for (std::size_t r = 0; r < out.size(); ++r) EXPECT_NEAR(out.scenarios[r].probability, expected[r], 1e-12);
}

TEST(Reduce, Deterministic) {
  RandomStream rng(2);
  const auto set = random_set(rng, 20, 5);
  EXPECT_EQ(reduce(set, 4).scenarios, reduce(set, 4).scenarios);
}

TEST(Reduce, RejectsOutOfRange) {
  RandomStream rng(3);
  const auto set = random_set(rng, 4, 2);
  EXPECT_THROW(reduce(set, 0), InvalidArgument);
  EXPECT_THROW(reduce(set, 5), InvalidArgument);
}

TEST(CrossProduct, ThreeFivesGive125) {
  RandomStream rng(5);
  const auto a = random_set(rng, 5, 3);
  auto b = random_set(rng, 5, 3);
  auto c = random_set(rng, 5, 3);
  b.quantity = Quantity::pv;
  c.quantity = Quantity::demand;
  const auto joint = cross_product({a, b, c});
  ASSERT_EQ(joint.size(), 125u);
  EXPECT_NEAR(joint.total_probability(), 1.0, 1e-9);
  // First set varies slowest.
  EXPECT_NEAR(joint.scenarios[26].probability,
              a.scenarios[1].probability * b.scenarios[0].probability * c.scenarios[1].probability, 1e-15);
  EXPECT_EQ(joint.values(26, Quantity::demand)[0], c.scenarios[1].values[0]);
}

TEST(CrossProduct, SingletonLeavesProbabilities) {
  RandomStream rng(6);
  const auto a = random_set(rng, 4, 2);
  ScenarioSet one{Quantity::pv, 1, {{{0.5, 0.5}, 1.0}}};
  const auto joint = cross_product({a, one});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(joint.scenarios[k].probability, a.scenarios[k].probability);
}

TEST(CrossProduct, RejectsHorizonMismatch) {
  RandomStream rng(7);
  const auto a = random_set(rng, 2, 3);
  const auto b = random_set(rng, 2, 4);
  EXPECT_THROW(cross_product({a, b}), InvalidArgument);
}
