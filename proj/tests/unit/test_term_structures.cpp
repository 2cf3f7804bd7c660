#include <gtest/gtest.h>

#include <random>

#include "acnote/term_structures.hpp"
#include "fixtures.hpp"

using namespace acnote;

namespace {

// Midpoint rule on a fine grid, independent of the closed-form segment sums.
double midpoint_integral(const PiecewiseCurve& c, double a, double b, int n, bool square) {
  double h = (b - a) / n, s = 0.0;
  for (int j = 0; j < n; ++j) {
    double v = c(a + (j + 0.5) * h);
    s += square ? v * v : v;
  }
  return s * h;
}

}  // namespace

TEST(PiecewiseCurve, TwoSegmentAverages) {
  VolatilityCurve vol({0.0, 1.0}, {0.1, 0.3});
  EXPECT_NEAR(curve_average(vol, 2.0), 0.2, 1e-15);
  EXPECT_NEAR(variance_average(vol, 2.0), std::sqrt(0.05), 1e-15);
  EXPECT_NEAR(variance_average(vol, 0.5), 0.1, 1e-15);
}

TEST(PiecewiseCurve, EvaluationUsesRightOpenSegments) {
  PiecewiseCurve c({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0});
  EXPECT_EQ(c(0.0), 1.0);
  EXPECT_EQ(c(0.999), 1.0);
  EXPECT_EQ(c(1.0), 2.0);
  EXPECT_EQ(c(5.0), 3.0);
  EXPECT_THROW(c(-0.1), DomainError);
}

TEST(PiecewiseCurve, CrossIntegralOnMergedGrid) {
  VolatilityCurve a({0.0, 1.0}, {0.1, 0.3});
  VolatilityCurve b({0.0, 0.5}, {0.2, 0.4});
  // [0,0.5): 0.02*0.5, [0.5,1): 0.04*0.5, [1,2): 0.12
  EXPECT_NEAR(cross_vol_integral(a, b, 2.0), 0.01 + 0.02 + 0.12, 1e-15);
  EXPECT_NEAR(cross_vol_integral(a, b, 0.25, 0.75), 0.02 * 0.25 + 0.04 * 0.25, 1e-15);
}

TEST(PiecewiseCurve, IntegralsMatchMidpointOracle) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    PiecewiseCurve c = fx::random_curve(rng, -0.02, 0.4);
    double a = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double b = a + std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    // The midpoint rule is exact inside segments; only the two breakpoint
    // cells per break contribute error of order h.
    EXPECT_NEAR(c.integral(a, b), midpoint_integral(c, a, b, 200000, false), 1e-5);
    EXPECT_NEAR(c.square_integral(a, b), midpoint_integral(c, a, b, 200000, true), 1e-5);
  }
}

TEST(PiecewiseCurve, RefinementInvariance) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    PiecewiseCurve c = fx::random_curve(rng, 0.05, 0.5);
    auto bp = c.breakpoints();
    auto v = c.values();
    std::vector<double> t2, v2;
    for (std::size_t j = 0; j < bp.size(); ++j) {
      t2.push_back(bp[j]);
      v2.push_back(v[j]);
      double next = j + 1 < bp.size() ? bp[j + 1] : bp[j] + 1.0;
      t2.push_back(0.5 * (bp[j] + next));
      v2.push_back(v[j]);
    }
    VolatilityCurve fine(t2, v2), coarse(c);
    for (double tau : {0.3, 1.0, 1.7, 2.5, 4.0}) {
      EXPECT_NEAR(fine.integral(0.0, tau), coarse.integral(0.0, tau), 1e-15);
      EXPECT_NEAR(variance_average(fine, tau), variance_average(coarse, tau), 1e-15);
      EXPECT_NEAR(cross_vol_integral(fine, coarse, tau), coarse.square_integral(0.0, tau), 1e-15);
    }
  }
}

TEST(PiecewiseCurve, RejectsInvalidInput) {
  EXPECT_THROW(PiecewiseCurve({}, {}), DomainError);
  EXPECT_THROW(PiecewiseCurve({0.0, 1.0}, {1.0}), DomainError);
  EXPECT_THROW(PiecewiseCurve({0.5}, {1.0}), DomainError);
  EXPECT_THROW(PiecewiseCurve({0.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), DomainError);
  EXPECT_THROW(VolatilityCurve({0.0}, {-0.1}), DomainError);
  EXPECT_THROW(curve_average(PiecewiseCurve::constant(1.0), 0.0), DomainError);
  EXPECT_THROW(variance_average(VolatilityCurve::constant(0.2), -1.0), DomainError);
}

TEST(DriverCorrelation, ConstantVolClosedForm) {
  MarketData m = fx::flat_market(0.01, {0.0, 0.0}, {0.25, 0.2}, 0.6);
  EXPECT_DOUBLE_EQ(driver_correlation(m, 0, 1.0, 0, 1.0), 1.0);
  EXPECT_NEAR(driver_correlation(m, 0, 1.0, 0, 4.0), 0.5, 1e-15);
  EXPECT_NEAR(driver_correlation(m, 0, 1.0, 1, 1.0), 0.6, 1e-15);
  EXPECT_NEAR(driver_correlation(m, 1, 2.0, 0, 0.5), 0.6 * std::sqrt(0.25), 1e-15);
}

TEST(DriverCorrelation, SymmetricAndPositiveSemidefinite) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    MarketData m = fx::random_market(rng);
    std::vector<double> taus{0.5, 1.0, 1.5, 2.5};
    const int n = 2 * static_cast<int>(taus.size());
    Eigen::MatrixXd R(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        R(a, b) = correlation_entry(a % 2 + 1, a / 2 + 1, b % 2 + 1, b / 2 + 1, m, taus);
    EXPECT_NEAR((R - R.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_TRUE((R.diagonal().array() == 1.0).all());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(DriverCorrelation, ZeroVolatilityIsDegenerate) {
  MarketData m = fx::flat_market(0.01, {0.0, 0.0}, {0.0, 0.2}, 0.5);
  EXPECT_THROW(driver_correlation(m, 0, 1.0, 1, 1.0), DegenerateInputError);
}

TEST(CorrelationEntry, ValidatesIndices) {
  MarketData m = fx::table1_market();
  std::vector<double> taus{1.0, 2.0};
  EXPECT_THROW(correlation_entry(0, 1, 1, 1, m, taus), DomainError);
  EXPECT_THROW(correlation_entry(1, 3, 1, 1, m, taus), DomainError);
  EXPECT_NEAR(correlation_entry(1, 1, 2, 2, m, taus), 0.78 * std::sqrt(0.5), 1e-15);
}

TEST(AveragedParams, MatchesDirectAverages) {
  MarketData m;
  m.rate = PiecewiseCurve({0.0, 1.0}, {0.01, 0.03});
  m.dividend = {PiecewiseCurve::constant(0.0), PiecewiseCurve({0.0, 0.5}, {0.02, 0.0})};
  m.vol = {VolatilityCurve({0.0, 1.0}, {0.3, 0.1}), VolatilityCurve::constant(0.2)};
  std::vector<double> taus{0.5, 2.0};
  AveragedParams p = averaged_params(m, taus);
  EXPECT_NEAR(p.r_bar[1], 0.02, 1e-15);
  EXPECT_NEAR(p.q_bar[1][1], 0.005, 1e-15);
  EXPECT_NEAR(p.sigma_bar[0][0], 0.3, 1e-15);
  EXPECT_NEAR(p.sigma_bar[0][1], std::sqrt(0.05), 1e-15);
}

TEST(MarketData, ValidateNamesField) {
  MarketData m = fx::table1_market();
  m.correlation[0][1] = 0.5;
  try {
    m.validate();
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("market.correlation"), std::string::npos);
  }
}
