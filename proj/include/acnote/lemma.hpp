#pragma once

/**
 * @file lemma.hpp
 * @brief Simulation check of the linear-transform identity
 *        E[1(B Z < b)] = N_m(D^-1 b, D^-1 B R B^T D^-1), D = sqrt(diag(B R B^T)).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "acnote/errors.hpp"
#include "acnote/gaussian.hpp"

namespace acnote {

struct LemmaInstance {
  Eigen::MatrixXd B;  // m x n, rank m
  Eigen::MatrixXd R;  // n x n correlation of Z
  Eigen::VectorXd b;  // length m
};

struct LemmaResult {
  double lhs_mc = 0.0;
  double rhs_formula = 0.0;
  double mc_se = 0.0;

  bool passes(double sigmas = 3.0) const { return std::abs(lhs_mc - rhs_formula) <= sigmas * mc_se; }
};

inline void validate(const LemmaInstance& inst) {
  const auto m = inst.B.rows();
  const auto n = inst.B.cols();
  if (m < 1 || m > n) throw DomainError("lemma: B must be m x n with 1 <= m <= n");
  if (inst.R.rows() != n || inst.R.cols() != n) throw DomainError("lemma: R must be n x n");
  if (inst.b.size() != m) throw DomainError("lemma: b must have length m");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(inst.B);
  qr.setThreshold(1e-10);
  if (qr.rank() != m) throw DomainError("lemma: B is rank deficient");
}

/// The Gaussian problem the identity predicts for an instance.
inline MvnQuery lemma_query(const LemmaInstance& inst, double tol, std::uint64_t seed) {
  Eigen::MatrixXd cov = inst.B * inst.R * inst.B.transpose();
  Eigen::VectorXd dinv = cov.diagonal().cwiseSqrt().cwiseInverse();
  MvnQuery q;
  q.d = dinv.asDiagonal() * inst.b;
  q.C = dinv.asDiagonal() * cov * dinv.asDiagonal();
  q.C = (q.C + q.C.transpose()) / 2.0;
  q.C.diagonal().setOnes();
  q.tol = tol;
  q.seed = seed;
  return q;
}

/// Estimates E[1(B Z < b)] by sampling Z = U eps with R = U U^T and compares
/// with the mvn_cdf value of the transformed problem.
inline LemmaResult lemma1_check(const LemmaInstance& inst, std::int64_t n_samples,
                                std::uint64_t seed, double formula_tol = 1e-5) {
  validate(inst);
  if (n_samples < 10'000) throw DomainError("lemma: need at least 1e4 samples");
  const auto m = inst.B.rows();
  const auto n = inst.B.cols();

  Eigen::LLT<Eigen::MatrixXd> llt(inst.R);
  Eigen::MatrixXd U;
  if (llt.info() == Eigen::Success) {
    U = llt.matrixL();
  } else {
    // Semi-definite R: symmetric square root from the eigen decomposition.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inst.R);
    if (eig.eigenvalues().minCoeff() < -kPsdTolerance)
      throw DomainError("lemma: R is not positive semi-definite");
    U = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Eigen::MatrixXd BU = inst.B * U;

  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal;
  Eigen::VectorXd eps(n);
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (Eigen::Index j = 0; j < n; ++j) eps(j) = normal(rng);
    bool inside = true;
    for (Eigen::Index r = 0; r < m && inside; ++r) inside = BU.row(r).dot(eps) < inst.b(r);
    hits += inside ? 1 : 0;
  }
  LemmaResult out;
  out.lhs_mc = static_cast<double>(hits) / static_cast<double>(n_samples);
  out.rhs_formula = mvn_cdf(lemma_query(inst, formula_tol, splitmix64(seed ^ 0xABCDEFULL))).value;
  // Standard error of the hit rate under the identity being tested, so that
  // instances with no hits (p close to 0) still get a meaningful bound.
  const double p = std::clamp(out.rhs_formula, 0.0, 1.0);
  out.mc_se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  return out;
}

/// Random instance with 1 <= m <= max_m, m <= n <= max_n. Thresholds are
/// scaled by the row standard deviations so probabilities stay away from 0/1.
inline LemmaInstance random_lemma_instance(std::mt19937_64& rng, int max_m, int max_n) {
  std::uniform_int_distribution<int> pick_m(1, max_m);
  std::normal_distribution<double> normal;
  const int m = pick_m(rng);
  std::uniform_int_distribution<int> pick_n(m, std::max(m, max_n));
  const int n = pick_n(rng);

  LemmaInstance inst;
  inst.B.resize(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) inst.B(r, c) = normal(rng);

  Eigen::MatrixXd G(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) G(r, c) = normal(rng);
  Eigen::MatrixXd cov = G * G.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd s = cov.diagonal().cwiseSqrt().cwiseInverse();
  inst.R = s.asDiagonal() * cov * s.asDiagonal();
  inst.R.diagonal().setOnes();

  Eigen::VectorXd row_sd = (inst.B * inst.R * inst.B.transpose()).diagonal().cwiseSqrt();
  inst.b.resize(m);
  for (int r = 0; r < m; ++r) inst.b(r) = row_sd(r) * (0.5 + 0.8 * normal(rng));
  return inst;
}

}  // namespace acnote
