#include <cmath>

#include <gtest/gtest.h>

#include "d2dcache/valuation.hpp"

using namespace d2dcache;

namespace {

PreferenceMatrix rows(const Matrix& f) { return PreferenceMatrix{f}; }

EncounterMatrix pair_encounter(double e)
{
  EncounterMatrix em{Matrix::Zero(2, 2)};
  em.e(0, 1) = em.e(1, 0) = e;
  return em;
}

ConflictGraph full_pair()
{
  ConflictGraph g{BinaryMatrix::Zero(2, 2), 0.0};
  g.E(0, 1) = g.E(1, 0) = 1;
  return g;
}

}  // namespace

TEST(Zipf, SmallCatalogs)
{
  const Vector p2 = zipf_popularity(2, 1.0);
  EXPECT_NEAR(p2[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p2[1], 1.0 / 3.0, 1e-15);
  const Vector p3 = zipf_popularity(3, 1.0);
  EXPECT_NEAR(p3[0], 6.0 / 11.0, 1e-15);
  EXPECT_NEAR(p3[1], 3.0 / 11.0, 1e-15);
  EXPECT_NEAR(p3[2], 2.0 / 11.0, 1e-15);
  const Vector flat = zipf_popularity(7, 0.0);
  for (int m = 0; m < 7; ++m) EXPECT_NEAR(flat[m], 1.0 / 7.0, 1e-15);
  EXPECT_THROW(zipf_popularity(0, 1.0), Error);
  EXPECT_THROW(zipf_popularity(3, -0.5), Error);
}

TEST(Zipf, DecreasingAndNormalized)
{
  for (double alpha : {0.3, 0.6, 1.0, 1.4, 2.2}) {
    const Vector p = zipf_popularity(30, alpha);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    for (int m = 1; m < 30; ++m) EXPECT_LT(p[m], p[m - 1]);
  }
}

TEST(Preferences, HomogeneousRowsEqualZipf)
{
  ContentParams cp;
  cp.chunk_count = 2;
  const auto pref = generate_preferences(cp, 5, RandomStream(1));
  for (int n = 0; n < 5; ++n) {
    EXPECT_NEAR(pref.f(n, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(pref.f(n, 1), 1.0 / 3.0, 1e-15);
  }
}

TEST(Preferences, PerturbedRowsArePermutationsOfZipf)
{
  ContentParams cp;
  cp.chunk_count = 6;
  cp.preference_mode = PreferenceMode::perturbed;
  cp.preference_swaps = 4;
  const auto pref = generate_preferences(cp, 20, RandomStream(9));
  Vector p = zipf_popularity(6, cp.zipf_alpha);
  std::sort(p.data(), p.data() + p.size());
  bool any_differs = false;
  for (int n = 0; n < 20; ++n) {
    Vector row = pref.f.row(n).transpose();
    EXPECT_NEAR(row.sum(), 1.0, 1e-12);
    if (row[0] != zipf_popularity(6, cp.zipf_alpha)[0]) any_differs = true;
    std::sort(row.data(), row.data() + row.size());
    for (int m = 0; m < 6; ++m) EXPECT_DOUBLE_EQ(row[m], p[m]);
  }
  EXPECT_TRUE(any_differs);

  cp.preference_swaps = 0;
  const auto zero = generate_preferences(cp, 4, RandomStream(9));
  cp.preference_mode = PreferenceMode::homogeneous;
  EXPECT_EQ(zero.f, generate_preferences(cp, 4, RandomStream(9)).f);
}

TEST(LocalPopularity, Examples)
{
  ContentParams cp;
  cp.chunk_count = 5;
  const auto F = local_popularity(generate_preferences(cp, 8, RandomStream(2)));
  const Vector p = zipf_popularity(5, 1.0);
  for (int m = 0; m < 5; ++m) EXPECT_NEAR(F[m], p[m], 1e-15);

  Matrix f(2, 2);
  f << 1, 0, 0, 1;
  const Vector half = local_popularity(rows(f));
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
}

TEST(LocalPopularity, MatchesIndependentSummation)
{
  RandomStream rng(77);
  Matrix f(6, 4);
  for (int n = 0; n < 6; ++n) {
    for (int m = 0; m < 4; ++m) f(n, m) = rng.uniform();
  }
  const Vector F = local_popularity(rows(f));
  double total = 0.0;
  for (int n = 0; n < 6; ++n) {
    for (int m = 0; m < 4; ++m) total += f(n, m);
  }
  for (int m = 0; m < 4; ++m) {
    double col = 0.0;
    for (int n = 0; n < 6; ++n) col += f(n, m);
    EXPECT_NEAR(F[m], col / total, 1e-15);
  }
}

TEST(SharingProfit, SingleNeighborExample)
{
  Matrix f(2, 1);
  f << 0.5, 0.5;
  Matrix rate = Matrix::Zero(2, 2);
  rate(0, 1) = rate(1, 0) = 2e6;
  const double w = sharing_profit(0, 0, rows(f), rate, pair_encounter(0.5), full_pair(), 1e-6, 8e6);
  EXPECT_NEAR(w, 4e6, 1e-6);
  const double doubled =
      sharing_profit(0, 0, rows(f), rate, pair_encounter(1.0), full_pair(), 1e-6, 8e6);
  EXPECT_NEAR(doubled, 2.0 * w, 1e-6);
  EXPECT_NEAR(sharing_profit(0, 0, rows(f), rate, pair_encounter(0.5), full_pair(), 3e-6, 8e6),
              3.0 * w, 1e-6);
}

TEST(SharingProfit, EmptyNeighborSetIsZero)
{
  Matrix f(2, 1);
  f << 0.5, 0.5;
  Matrix rate = Matrix::Constant(2, 2, 2e6);
  ConflictGraph none{BinaryMatrix::Zero(2, 2), 0.9};
  EXPECT_EQ(sharing_profit(0, 0, rows(f), rate, pair_encounter(0.5), none, 1e-6, 8e6), 0.0);
}

TEST(SharingProfit, MonotoneInInputs)
{
  RandomStream rng(5);
  const int n = 5;
  Matrix f(n, 1), rate(n, n);
  EncounterMatrix em{Matrix::Zero(n, n)};
  ConflictGraph g{BinaryMatrix::Zero(n, n), 0.0};
  for (int a = 0; a < n; ++a) {
    f(a, 0) = rng.uniform();
    for (int b = 0; b < n; ++b) rate(a, b) = 1e6 * (1.0 + rng.uniform());
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      em.e(a, b) = em.e(b, a) = rng.uniform();
      g.E(a, b) = g.E(b, a) = rng.uniform() < 0.6 ? 1 : 0;
    }
  }
  const double base = sharing_profit(0, 0, rows(f), rate, em, g, 1e-6, 8e6);
  for (int k = 1; k < n; ++k) {
    EncounterMatrix e2 = em;
    e2.e(0, k) = e2.e(k, 0) = std::min(1.0, em.e(0, k) + 0.2);
    Matrix r2 = rate;
    r2(0, k) *= 1.5;
    Matrix f2 = f;
    f2(k, 0) += 0.3;
    EXPECT_GE(sharing_profit(0, 0, rows(f), rate, e2, g, 1e-6, 8e6), base);
    EXPECT_GE(sharing_profit(0, 0, rows(f), r2, em, g, 1e-6, 8e6), base);
    EXPECT_GE(sharing_profit(0, 0, rows(f2), rate, em, g, 1e-6, 8e6), base);
  }
}

TEST(Revenue, Arithmetic)
{
  EXPECT_DOUBLE_EQ(revenue(5.0, 1.0, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(revenue(1.0, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(revenue(0.0, 1.0, 1.0), -1.0);
}

TEST(ValueVector, HandBuiltTwoUtTwoChunk)
{
  Matrix f(2, 2);
  f << 0.75, 0.25, 0.4, 0.6;
  Matrix rate = Matrix::Zero(2, 2);
  rate(0, 1) = rate(1, 0) = 3e6;
  ContentParams cp;
  cp.chunk_count = 2;
  const auto vv = build_value_vector(rows(f), rate, pair_encounter(0.2), full_pair(), cp);
  // v(n, m) = 1e-6 * 8e6 * f(other, m) * 3e6 * 0.2 - 1.
  const double k = 1e-6 * 8e6 * 3e6 * 0.2;
  EXPECT_NEAR(vv.v(0, 0), k * 0.4 - 1.0, 1e-6);
  EXPECT_NEAR(vv.v(0, 1), k * 0.6 - 1.0, 1e-6);
  EXPECT_NEAR(vv.v(1, 0), k * 0.75 - 1.0, 1e-6);
  EXPECT_NEAR(vv.v(1, 1), k * 0.25 - 1.0, 1e-6);
  EXPECT_EQ(vv.participating.sum(), 4);

  const Vector st = vv.stacked();
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) EXPECT_EQ(st[m * 2 + n], vv.v(n, m));
  }
}

TEST(ValueVector, NoProfitMeansNoParticipation)
{
  Matrix f = Matrix::Constant(2, 3, 1.0 / 3.0);
  Matrix rate = Matrix::Zero(2, 2);
  ContentParams cp;
  cp.chunk_count = 3;
  const auto vv = build_value_vector(rows(f), rate, pair_encounter(0.5), full_pair(), cp);
  EXPECT_EQ(vv.participating.sum(), 0);
  EXPECT_TRUE((vv.stacked_bids().array() == 0.0).all());
  EXPECT_TRUE((vv.v.array() < 0.0).all());
}
