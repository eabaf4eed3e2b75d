#pragma once

// Multivariate Gaussian model of hourly forecast errors: estimation from a
// day-by-hour error matrix, conditioning on realized hours, and sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "aggsim/error.hpp"
#include "aggsim/random.hpp"

namespace aggsim {

struct GaussianErrorModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::vector<int> hour_labels;  // 1-based hour of day for each index

  Eigen::Index dim() const { return mu.size(); }

  void validate() const {
    detail::require(sigma.rows() == mu.size() && sigma.cols() == mu.size() &&
                        hour_labels.size() == static_cast<std::size_t>(mu.size()),
                    "error model dimensions disagree");
    detail::require(mu.allFinite() && sigma.allFinite(), "error model holds non-finite entries");
    detail::require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
                    "error covariance is not symmetric");
    if (mu.size() > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
      detail::require(es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, sigma.trace()),
                      "error covariance is not positive semidefinite");
    }
  }
};

inline constexpr double kCovarianceShrinkage = 0.05;

/// Column means and shrunk sample covariance (1-λ)S + λ diag(S).
inline GaussianErrorModel estimate(const Eigen::MatrixXd& errors, Eigen::Index min_days = 30) {
  if (errors.rows() < min_days) {
    throw InvalidArgument("estimate: need at least " + std::to_string(min_days) + " days of errors");
  }
  if (!errors.allFinite()) throw InvalidArgument("estimate: error matrix holds non-finite entries");

  GaussianErrorModel model;
  model.mu = errors.colwise().mean().transpose();
  const Eigen::MatrixXd centered = errors.rowwise() - model.mu.transpose();
  const Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(errors.rows() - 1);
  model.sigma = (1.0 - kCovarianceShrinkage) * s;
  model.sigma.diagonal() = s.diagonal();
  model.sigma = 0.5 * (model.sigma + model.sigma.transpose());
  model.hour_labels.resize(static_cast<std::size_t>(errors.cols()));
  for (std::size_t i = 0; i < model.hour_labels.size(); ++i) model.hour_labels[i] = static_cast<int>(i) + 1;
  return model;
}

/// Distribution of the unobserved hours given realized values on `observed_hours`.
///
/// μ̂₂ = μ₂ + Σ₂₁ Σ₁₁⁻¹ (β - μ₁),  Σ̂₂ = Σ₂₂ - Σ₂₁ Σ₁₁⁻¹ Σ₁₂.
///
/// Observed hours with exactly zero variance carry no information and are
/// dropped. Σ₁₁ gets a ridge of 1e-8·tr(Σ₁₁)/dim only when its Cholesky
/// factorization fails or is badly conditioned.
inline GaussianErrorModel condition(const GaussianErrorModel& model, std::span<const int> observed_hours,
                                    std::span<const double> observed_values) {
  detail::require(observed_hours.size() == observed_values.size(), "condition: hours and values differ in length");
  detail::require(!observed_hours.empty(), "condition: no observed hours");
  detail::require(static_cast<Eigen::Index>(observed_hours.size()) < model.dim(),
                  "condition: every hour is observed; nothing left to condition");

  std::vector<Eigen::Index> obs;
  std::vector<double> beta;
  std::vector<bool> is_observed(static_cast<std::size_t>(model.dim()), false);
  for (std::size_t k = 0; k < observed_hours.size(); ++k) {
    const auto it = std::find(model.hour_labels.begin(), model.hour_labels.end(), observed_hours[k]);
    if (it == model.hour_labels.end()) {
      throw InvalidArgument("condition: hour " + std::to_string(observed_hours[k]) + " is not in the model");
    }
    const auto idx = static_cast<Eigen::Index>(it - model.hour_labels.begin());
    if (is_observed[static_cast<std::size_t>(idx)]) throw InvalidArgument("condition: duplicate observed hour");
    is_observed[static_cast<std::size_t>(idx)] = true;
    if (model.sigma(idx, idx) > 0.0) {
      obs.push_back(idx);
      beta.push_back(observed_values[k]);
    }
  }
  std::vector<Eigen::Index> rest;
  GaussianErrorModel out;
  for (Eigen::Index i = 0; i < model.dim(); ++i) {
    if (!is_observed[static_cast<std::size_t>(i)]) {
      rest.push_back(i);
      out.hour_labels.push_back(model.hour_labels[static_cast<std::size_t>(i)]);
    }
  }

  const auto n1 = static_cast<Eigen::Index>(obs.size());
  const auto n2 = static_cast<Eigen::Index>(rest.size());
  Eigen::VectorXd mu2(n2);
  Eigen::MatrixXd s22(n2, n2);
  for (Eigen::Index i = 0; i < n2; ++i) {
    mu2[i] = model.mu[rest[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < n2; ++j) s22(i, j) = model.sigma(rest[static_cast<std::size_t>(i)], rest[static_cast<std::size_t>(j)]);
  }
  if (n1 == 0) {
    out.mu = mu2;
    out.sigma = s22;
    return out;
  }

  Eigen::VectorXd mu1(n1);
  Eigen::VectorXd b(n1);
  Eigen::MatrixXd s11(n1, n1);
  Eigen::MatrixXd s21(n2, n1);
  for (Eigen::Index i = 0; i < n1; ++i) {
    mu1[i] = model.mu[obs[static_cast<std::size_t>(i)]];
    b[i] = beta[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n1; ++j) s11(i, j) = model.sigma(obs[static_cast<std::size_t>(i)], obs[static_cast<std::size_t>(j)]);
    for (Eigen::Index j = 0; j < n2; ++j) s21(j, i) = model.sigma(rest[static_cast<std::size_t>(j)], obs[static_cast<std::size_t>(i)]);
  }
  if (!b.allFinite()) throw InvalidArgument("condition: observed values must be finite");

  Eigen::LLT<Eigen::MatrixXd> llt(s11);
  auto well_conditioned = [&](const Eigen::LLT<Eigen::MatrixXd>& f) {
    if (f.info() != Eigen::Success) return false;
    const Eigen::VectorXd diag = f.matrixLLT().diagonal();
    const double lo = diag.minCoeff();
    const double hi = diag.maxCoeff();
    return lo > 0.0 && (lo / hi) * (lo / hi) > 1e-12;
  };
  if (!well_conditioned(llt)) {
    Eigen::MatrixXd ridged = s11;
    ridged.diagonal().array() += 1e-8 * s11.trace() / static_cast<double>(n1);
    llt.compute(ridged);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedModel("condition: observed covariance block is singular beyond ridge repair");
    }
  }

  const Eigen::MatrixXd gain = llt.solve(s21.transpose()).transpose();  // Σ₂₁ Σ₁₁⁻¹
  out.mu = mu2 + gain * (b - mu1);
  out.sigma = s22 - gain * s21.transpose();
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  return out;
}

/// Symmetric PSD square root V·diag(√max(λ,0))·Vᵀ.
inline Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// n draws, one per row.
inline Eigen::MatrixXd sample(const GaussianErrorModel& model, Eigen::Index n, std::uint64_t seed) {
  detail::require(n >= 1, "sample: need at least one draw");
  const Eigen::Index dim = model.dim();
  const Eigen::MatrixXd root = psd_square_root(model.sigma);
  RandomStream rng(seed);
  Eigen::MatrixXd z(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) z(i, j) = rng.normal();
  }
  Eigen::MatrixXd out = z * root;  // root is symmetric
  out.rowwise() += model.mu.transpose();
  return out;
}

}  // namespace aggsim
