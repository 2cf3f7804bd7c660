#include <gtest/gtest.h>

#include <random>

#include "acnote/lemma.hpp"

using namespace acnote;

TEST(Lemma, IdentityOrthantIsPowerOfHalf) {
  for (int m = 1; m <= 4; ++m) {
    LemmaInstance inst{Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd::Identity(m, m),
                       Eigen::VectorXd::Zero(m)};
    LemmaResult r = lemma1_check(inst, 200'000, 42 + m);
    EXPECT_NEAR(r.rhs_formula, std::ldexp(1.0, -m), 1e-6);
    EXPECT_TRUE(r.passes()) << "m=" << m << " lhs=" << r.lhs_mc << " se=" << r.mc_se;
  }
}

TEST(Lemma, RankDeficientIsDomainError) {
  LemmaInstance inst{Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Identity(3, 3),
                     Eigen::VectorXd::Zero(2)};
  EXPECT_THROW(lemma1_check(inst, 10'000, 1), DomainError);
}

TEST(Lemma, ShapeValidation) {
  LemmaInstance wide{Eigen::MatrixXd::Identity(3, 2), Eigen::MatrixXd::Identity(2, 2),
                     Eigen::VectorXd::Zero(3)};
  EXPECT_THROW(validate(wide), DomainError);
  LemmaInstance badb{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                     Eigen::VectorXd::Zero(3)};
  EXPECT_THROW(validate(badb), DomainError);
  LemmaInstance few{Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                    Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(lemma1_check(few, 100, 1), DomainError);
}

TEST(Lemma, QueryNormalizesRows) {
  // A single row: P(b1 Z1 + b2 Z2 < c) with correlated Z has the closed form
  // Phi(c / sqrt(b R b^T)).
  LemmaInstance inst;
  inst.B = Eigen::RowVector2d(2.0, -1.0);
  inst.R = Eigen::Matrix2d{{1.0, 0.3}, {0.3, 1.0}};
  inst.b = Eigen::VectorXd::Constant(1, 0.7);
  MvnQuery q = lemma_query(inst, 1e-6, 0);
  double sd = std::sqrt(4.0 + 1.0 - 2.0 * 2.0 * 0.3);
  EXPECT_NEAR(q.d(0), 0.7 / sd, 1e-15);
  EXPECT_NEAR(mvn_cdf(q).value, normal_cdf(0.7 / sd), 1e-15);
}

TEST(Lemma, OrthogonalCompletionDecouples) {
  // For R positive definite, rows spanning the R-orthogonal complement of
  // B's row space are uncorrelated with B Z, so the joint density of
  // (B Z, B_perp Z) factorizes and integrating out B_perp Z leaves N_m.
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    LemmaInstance inst = random_lemma_instance(rng, 3, 6);
    const auto m = inst.B.rows(), n = inst.B.cols();
    if (m == n) continue;
    Eigen::MatrixXd BR = inst.B * inst.R;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(BR);
    Eigen::MatrixXd perp = lu.kernel().transpose();  // (n - m) x n with perp R^T B^T = 0
    ASSERT_EQ(perp.rows(), n - m);
    Eigen::MatrixXd cross = inst.B * inst.R * perp.transpose();
    EXPECT_LT(cross.cwiseAbs().maxCoeff(), 1e-10);
    Eigen::MatrixXd full(n, n);
    full << inst.B, perp;
    EXPECT_GT(std::abs(full.determinant()), 1e-12);
  }
}

TEST(Lemma, RandomInstancesPassMostly) {
  std::mt19937_64 rng(77);
  int pass = 0;
  const int count = 20;
  for (int i = 0; i < count; ++i) {
    LemmaInstance inst = random_lemma_instance(rng, 4, 6);
    pass += lemma1_check(inst, 100'000, 1000 + i).passes();
  }
  // Each instance passes with probability about 0.997 under the identity.
  EXPECT_GE(pass, count - 2);
}

TEST(Lemma, RandomInstanceShapes) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    LemmaInstance inst = random_lemma_instance(rng, 4, 6);
    EXPECT_GE(inst.B.rows(), 1);
    EXPECT_LE(inst.B.rows(), 4);
    EXPECT_GE(inst.B.cols(), inst.B.rows());
    EXPECT_LE(inst.B.cols(), 6);
    EXPECT_NO_THROW(validate(inst));
  }
}

TEST(Lemma, SingularCovarianceUsesEigenRoot) {
  LemmaInstance inst;
  inst.R = Eigen::Matrix3d{{1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  inst.B = Eigen::MatrixXd(2, 3);
  inst.B << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  inst.b = Eigen::Vector2d(0.0, 0.0);
  LemmaResult r = lemma1_check(inst, 200'000, 3);
  EXPECT_NEAR(r.rhs_formula, 0.25, 1e-12);
  EXPECT_TRUE(r.passes());
}
