#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aggsim/errormodel.hpp"
#include "aggsim/random.hpp"

using namespace aggsim;

namespace {

GaussianErrorModel model_of(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
  GaussianErrorModel m{std::move(mu), std::move(sigma), {}};
  for (Eigen::Index i = 0; i < m.dim(); ++i) m.hour_labels.push_back(static_cast<int>(i) + 1);
  return m;
}

Eigen::MatrixXd random_psd(Eigen::Index dim, RandomStream& rng) {
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / static_cast<double>(dim) + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
}

Eigen::MatrixXd iid_normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST(Estimate, ZerosGiveZeroModel) {
  const auto m = estimate(Eigen::MatrixXd::Zero(40, 24));
  EXPECT_EQ(m.dim(), 24);
  EXPECT_TRUE(m.mu.isZero());
  EXPECT_TRUE(m.sigma.isZero());
  EXPECT_EQ(m.hour_labels.front(), 1);
  EXPECT_EQ(m.hour_labels.back(), 24);
}

TEST(Estimate, IdenticalColumnsShrinkToPointNineFive) {
  auto e = iid_normal(100, 3, 2);
  e.col(1) = e.col(0);
  const auto m = estimate(e);
  const double corr = m.sigma(0, 1) / std::sqrt(m.sigma(0, 0) * m.sigma(1, 1));
  EXPECT_NEAR(corr, 0.95, 1e-12);
  EXPECT_NO_THROW(m.validate());
}

TEST(Estimate, IidNormalConcentrates) {
  const auto m = estimate(iid_normal(10000, 24, 3));
  for (Eigen::Index i = 0; i < 24; ++i) {
    EXPECT_NEAR(m.mu[i], 0.0, 0.05);
    EXPECT_NEAR(m.sigma(i, i), 1.0, 0.1);
  }
}

TEST(Estimate, RejectsShortOrNonFinite) {
  EXPECT_THROW(estimate(Eigen::MatrixXd::Zero(29, 24)), InvalidArgument);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(40, 24);
  e(3, 3) = std::nan("");
  EXPECT_THROW(estimate(e), InvalidArgument);
}

TEST(Estimate, SampleRoundTripWithinStandardErrors) {
  RandomStream rng(5);
  const auto truth = model_of(Eigen::VectorXd::LinSpaced(6, -1.0, 1.0), random_psd(6, rng));
  const Eigen::Index n = 100000;
  const auto draws = sample(truth, n, 17);
  // Undo the shrinkage to compare the raw sample covariance.
  const auto est = estimate(draws);
  Eigen::MatrixXd raw = est.sigma / (1.0 - kCovarianceShrinkage);
  raw.diagonal() = est.sigma.diagonal();
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_NEAR(est.mu[i], truth.mu[i], 3.0 * std::sqrt(truth.sigma(i, i) / static_cast<double>(n)));
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double se = std::sqrt((truth.sigma(i, i) * truth.sigma(j, j) + truth.sigma(i, j) * truth.sigma(i, j)) /
                                  static_cast<double>(n));
      EXPECT_NEAR(raw(i, j), truth.sigma(i, j), 3.0 * se) << i << "," << j;
    }
  }
}

TEST(Condition, BlockIndependentIsMarginal) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  s.topLeftCorner(2, 2) << 2.0, 0.5, 0.5, 1.0;
  s.bottomRightCorner(2, 2) << 1.5, -0.3, -0.3, 0.7;
  const auto m = model_of(Eigen::Vector4d(1, 2, 3, 4), s);
  const std::vector<int> hours{1, 2};
  const std::vector<double> values{10.0, -10.0};
  const auto c = condition(m, hours, values);
  EXPECT_EQ(c.hour_labels, (std::vector<int>{3, 4}));
  EXPECT_TRUE(c.mu.isApprox(Eigen::Vector2d(3, 4)));
  EXPECT_TRUE(c.sigma.isApprox(s.bottomRightCorner(2, 2)));
}

TEST(Condition, TwoDimensionalTextbookCase) {
  Eigen::Matrix2d s;
  s << 1.0, 0.8, 0.8, 1.0;
  const auto m = model_of(Eigen::Vector2d::Zero(), s);
  const std::vector<int> hours{1};
  const std::vector<double> values{1.0};
  const auto c = condition(m, hours, values);
  EXPECT_NEAR(c.mu[0], 0.8, 1e-12);
  EXPECT_NEAR(c.sigma(0, 0), 0.36, 1e-12);
  // Empirical moments of 10^6 conditional draws.
  const auto draws = sample(c, 1000000, 23);
  const double mean = draws.col(0).mean();
  const double var = (draws.col(0).array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.8, 0.01);
  EXPECT_NEAR(var, 0.36, 0.01);
}

TEST(Condition, ObservingTheMeanKeepsMeanAndContractsVariance) {
  RandomStream rng(8);
  const auto m = model_of(Eigen::VectorXd::LinSpaced(8, 0.0, 7.0), random_psd(8, rng));
  const std::vector<int> hours{2, 5, 7};
  const std::vector<double> values{m.mu[1], m.mu[4], m.mu[6]};
  const auto c = condition(m, hours, values);
  const std::vector<Eigen::Index> rest{0, 2, 3, 5, 7};
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(c.mu[r], m.mu[rest[i]], 1e-12);
    EXPECT_LE(c.sigma(r, r), m.sigma(rest[i], rest[i]) + 1e-12);
  }
  EXPECT_NO_THROW(c.validate());
}

TEST(Condition, SplittingIsConsistent) {
  RandomStream rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = model_of(Eigen::VectorXd::Random(24), random_psd(24, rng));
    const std::vector<int> h1{1}, h2{2}, both{1, 2};
    const std::vector<double> v1{0.7}, v2{-1.3}, vb{0.7, -1.3};
    const auto step = condition(condition(m, h1, v1), h2, v2);
    const auto once = condition(m, both, vb);
    EXPECT_EQ(step.hour_labels, once.hour_labels);
    EXPECT_LT((step.mu - once.mu).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((step.sigma - once.sigma).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Condition, ZeroVarianceHoursCarryNoInformation) {
  Eigen::Matrix3d s;
  s << 0.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.5, 1.0;
  const auto m = model_of(Eigen::Vector3d::Zero(), s);
  const std::vector<int> hours{1};
  const std::vector<double> values{0.0};
  const auto c = condition(m, hours, values);
  EXPECT_TRUE(c.sigma.isApprox(s.bottomRightCorner(2, 2)));
}

TEST(Condition, SingularObservedBlockIsRidged) {
  Eigen::Matrix3d s;
  s << 1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 0.5, 0.5, 1.0;
  const auto m = model_of(Eigen::Vector3d::Zero(), s);
  const std::vector<int> hours{1, 2};
  const std::vector<double> values{1.0, 1.0};
  const auto c = condition(m, hours, values);
  EXPECT_NEAR(c.mu[0], 0.5, 1e-6);
  EXPECT_NEAR(c.sigma(0, 0), 0.75, 1e-6);
}

TEST(Condition, IndefiniteObservedBlockFails) {
  Eigen::Matrix3d s;
  s << 1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0;
  const auto m = model_of(Eigen::Vector3d::Zero(), s);
  const std::vector<int> hours{1, 2};
  const std::vector<double> values{0.0, 0.0};
  EXPECT_THROW(condition(m, hours, values), IllConditionedModel);
}

TEST(Condition, RejectsBadHourSets) {
  const auto m = model_of(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  const std::vector<int> none{}, unknown{5}, all{1, 2}, dup{1, 1};
  const std::vector<double> v0{}, v1{0.0}, v2{0.0, 0.0};
  EXPECT_THROW(condition(m, none, v0), InvalidArgument);
  EXPECT_THROW(condition(m, unknown, v1), InvalidArgument);
  EXPECT_THROW(condition(m, all, v2), InvalidArgument);
  EXPECT_THROW(condition(m, dup, v2), InvalidArgument);
}

TEST(Sample, ZeroCovarianceRepeatsMean) {
  const auto m = model_of(Eigen::Vector3d(1, -2, 3), Eigen::Matrix3d::Zero());
  const auto d = sample(m, 50, 1);
  for (Eigen::Index i = 0; i < d.rows(); ++i) EXPECT_TRUE(d.row(i).transpose().isApprox(m.mu));
}

TEST(Sample, UnivariateMoments) {
  const auto m = model_of(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const auto d = sample(m, 1000000, 77);
  const double mean = d.col(0).mean();
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR((d.col(0).array() - mean).square().mean(), 1.0, 0.01);
}

TEST(Sample, SameSeedSameDraws) {
  RandomStream rng(3);
  const auto m = model_of(Eigen::VectorXd::Zero(5), random_psd(5, rng));
  EXPECT_EQ(sample(m, 20, 9), sample(m, 20, 9));
  EXPECT_NE(sample(m, 20, 9), sample(m, 20, 10));
}

TEST(Validate, DetectsAsymmetryAndIndefiniteness) {
  Eigen::Matrix2d a;
  a << 1.0, 0.2, 0.1, 1.0;
  EXPECT_THROW(model_of(Eigen::Vector2d::Zero(), a).validate(), InvalidArgument);
  Eigen::Matrix2d b;
  b << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(model_of(Eigen::Vector2d::Zero(), b).validate(), InvalidArgument);
}
