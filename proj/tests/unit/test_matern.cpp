#include "geoprof/bessel.hpp"
#include "geoprof/matern.hpp"

#include "oracles.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace geoprof;

TEST(BesselK, MatchesBoostAcrossOrdersAndArguments) {
  for (double nu : {0.0, 0.1, 0.5, 0.75, 1.0, 1.5, 2.3, 4.0, 7.5, 15.0, 40.0}) {
    for (double x : {1e-4, 0.01, 0.3, 1.0, 1.99, 2.01, 5.0, 20.0, 100.0, 600.0}) {
      const double ref = std::log(boost::math::cyl_bessel_k(nu, x));
      if (!std::isfinite(ref)) continue;
      EXPECT_NEAR(logBesselK(nu, x), ref, 1e-11 * std::max(1.0, std::abs(ref)))
          << "nu=" << nu << " x=" << x;
    }
  }
}

TEST(BesselK, LargeArgumentDoesNotUnderflow) {
  // K_1(2000) ~ 1e-870 underflows double; the log form stays finite.
  const double v = logBesselK(1.0, 2000.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -2000.0 + 0.5 * std::log(std::numbers::pi / 4000.0), 1e-3);
}

TEST(BesselK, FixedOrderEvaluatorAgrees) {
  for (double nu : {0.2, 1.7, 9.0}) {
    const BesselKOrder k(nu);
    for (double x : {0.05, 1.0, 3.0, 30.0}) EXPECT_DOUBLE_EQ(k.logK(x), logBesselK(nu, x));
  }
}

TEST(AnisotropicDistance, Examples) {
  EXPECT_NEAR(anisotropicDistance(2.0, 0.0, 2.0, 1.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(anisotropicDistance(0.0, 3.0, 2.0, 1.0, std::numbers::pi / 2), 1.5, 1e-12);
}

TEST(AnisotropicDistance, IsotropyIgnoresAngle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const double hx = u(rng), hy = u(rng), a = u(rng);
    EXPECT_NEAR(anisotropicDistance(hx, hy, 2.5, 2.5, a), std::hypot(hx, hy) / 2.5, 1e-12);
  }
}

TEST(MaternRho, Examples) {
  EXPECT_NEAR(maternRho(0.5, 0.5), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(maternRho(0.3, 1e6), std::exp(-0.18), 1e-12);
  for (double k : {0.1, 0.5, 2.0, 10.0, 100.0}) EXPECT_NEAR(maternRho(0.0, k), 1.0, 1e-12);
}

TEST(MaternRho, MatchesBoostOracle) {
  for (double k : {0.15, 0.7, 1.0, 2.5, 6.0, 30.0}) {
    for (double d : {1e-6, 1e-3, 0.05, 0.2, 0.5, 1.0, 2.0}) {
      EXPECT_NEAR(maternRho(d, k), oracle::matern(d, k), 1e-10) << "kappa=" << k << " d=" << d;
    }
  }
  for (double d : {0.05, 0.2, 0.5, 1.0, 2.0}) EXPECT_NEAR(maternRho(d, 100.0), oracle::matern(d, 100.0), 1e-10);
}

TEST(MaternRho, MonotoneDecreasingInDistance) {
  for (double k : {0.3, 1.0, 4.0, 50.0}) {
    double prev = 1.0;
    for (int i = 1; i <= 200; ++i) {
      const double v = maternRho(0.02 * i, k);
      EXPECT_LE(v, prev);
      EXPECT_GE(v, 0.0);
      prev = v;
    }
  }
}

TEST(MaternRho, RejectsInvalidArguments) {
  EXPECT_THROW(maternRho(-0.1, 1.0), DomainError);
  EXPECT_THROW(maternRho(0.1, 0.0), DomainError);
}

TEST(MaternBatch, SymmetricWithNuggetDiagonal) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd coords = oracle::randomDataset(rng, 12, 1).coords;
  std::vector<NaturalParams> ps{NaturalParams(3.0, 1.5, 0.4, 1.2, 0.25),
                                NaturalParams::isotropic(2.0, 0.5, 0.0)};
  MatrixBatch<double> out(ps.size(), 12, 12);
  maternBatch<double>(coords, ps, out);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const Eigen::MatrixXd ref = oracle::correlation(coords, ps[k]);
    for (int i = 0; i < 12; ++i) {
      EXPECT_DOUBLE_EQ(out(k, i, i), 1.0 + ps[k].nuggetSq());
      for (int j = 0; j < 12; ++j) {
        EXPECT_EQ(out(k, i, j), out(k, j, i));
        EXPECT_NEAR(out(k, i, j), ref(i, j), 1e-10);
      }
    }
  }
  EXPECT_DOUBLE_EQ(out(0, 0, 0), 1.25);
}

TEST(MaternBatch, IdenticalSetsGiveIdenticalMatrices) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd coords = oracle::randomDataset(rng, 30, 1).coords;
  const NaturalParams p(4.0, 2.0, -0.3, 1.7, 0.1);
  std::vector<NaturalParams> ps(3, p);
  MatrixBatch<double> out(3, 30, 30);
  maternBatch<double>(coords, ps, out);
  for (std::size_t k = 1; k < 3; ++k) {
    for (std::size_t i = 0; i < out.stride(); ++i) EXPECT_EQ(out.matrix(k)[i], out.matrix(0)[i]);
  }
}

TEST(MaternBatch, SinglePrecisionCloseToDouble) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd coords = oracle::randomDataset(rng, 10, 1).coords;
  std::vector<NaturalParams> ps{NaturalParams(3.0, 2.0, 0.1, 2.0, 0.3)};
  MatrixBatch<double> d(1, 10, 10);
  MatrixBatch<float> f(1, 10, 10);
  maternBatch<double>(coords, ps, d);
  maternBatch<float>(coords, ps, f);
  for (std::size_t i = 0; i < d.stride(); ++i) EXPECT_NEAR(f.data()[i], d.data()[i], 1e-6);
}

TEST(MaternMatrix, EqualsBatchOfOne) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd coords = oracle::randomDataset(rng, 8, 1).coords;
  const NaturalParams p(2.0, 1.0, 1.0, 0.8, 0.05);
  const Eigen::MatrixXd m = maternMatrix(coords, p);
  std::vector<NaturalParams> ps{p};
  MatrixBatch<double> out(1, 8, 8);
  maternBatch<double>(coords, ps, out);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_EQ(m(i, j), out(0, i, j));
}
