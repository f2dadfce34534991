#include <psymeter/error.hpp>
#include <psymeter/rng.hpp>
#include <psymeter/standardization.hpp>
#include <psymeter/stats.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace psymeter;

namespace {

struct Bin {
  int score;
  double lo;  // -inf for the first bin
  double hi;  // +inf for the last bin
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Conversion table rows, lower-inclusive and upper-exclusive.
const Bin kStanineTable[] = {{1, -kInf, -1.75}, {2, -1.75, -1.25}, {3, -1.25, -0.75},
                             {4, -0.75, -0.25}, {5, -0.25, 0.25},  {6, 0.25, 0.75},
                             {7, 0.75, 1.25},   {8, 1.25, 1.75},   {9, 1.75, kInf}};
const Bin kStenTable[] = {{1, -kInf, -2.0}, {2, -2.0, -1.5}, {3, -1.5, -1.0}, {4, -1.0, -0.5},
                          {5, -0.5, 0.0},   {6, 0.0, 0.5},   {7, 0.5, 1.0},   {8, 1.0, 1.5},
                          {9, 1.5, 2.0},    {10, 2.0, kInf}};

template <class Fn, std::size_t N>
void check_table(Fn fn, const Bin (&table)[N]) {
  for (const auto& b : table) {
    if (std::isfinite(b.lo)) {
      EXPECT_EQ(fn(b.lo), b.score) << "lower edge " << b.lo;
      EXPECT_EQ(fn(std::nextafter(b.lo, -kInf)), b.score - 1) << "just below " << b.lo;
    }
    const double mid = std::isfinite(b.lo) && std::isfinite(b.hi) ? (b.lo + b.hi) / 2
                       : std::isfinite(b.lo)                      ? b.lo + 3
                                                                  : b.hi - 3;
    EXPECT_EQ(fn(mid), b.score) << "midpoint " << mid;
  }
}

}  // namespace

TEST(ZScore, CenterUnitAndWorkedInversion) {
  NormReference norm{100, 15};
  EXPECT_EQ(z_score(100, norm), 0.0);
  EXPECT_EQ(z_score(115, norm), 1.0);
  EXPECT_NEAR(z_score(86.65, norm), -0.89, 1e-12);
}

TEST(ZScore, DegenerateNorm) {
  EXPECT_THROW(z_score(1.0, NormReference{0, 0}), DegenerateInputError);
  EXPECT_THROW(z_score(1.0, NormReference{0, -2}), DegenerateInputError);
}

TEST(TScore, WorkedValueAndFormula) {
  EXPECT_NEAR(t_score(-0.89), 41.1, 1e-10);
  EXPECT_EQ(t_score(0), 50.0);
  EXPECT_EQ(t_score(2), 70.0);
}

TEST(Stanine, TableRows) {
  check_table(stanine, kStanineTable);
  EXPECT_EQ(stanine(-0.89), 3);
  EXPECT_EQ(stanine(-0.72), 4);
  // Table value; the prose example lists 4 for this developer.
  EXPECT_EQ(stanine(-0.94), 3);
  EXPECT_EQ(stanine(0.0), 5);
}

TEST(Sten, TableRows) {
  check_table(sten, kStenTable);
  EXPECT_EQ(sten(-0.89), 4);
  EXPECT_EQ(sten(-0.72), 4);
  EXPECT_EQ(sten(-0.94), 4);
  EXPECT_EQ(sten(2.5), 10);
}

TEST(Bins, MonotoneStepFunctions) {
  int prev_stanine = 1, prev_sten = 1;
  for (double z = -5.0; z <= 5.0; z += 0.001) {
    const int a = stanine(z), b = sten(z);
    EXPECT_GE(a, prev_stanine);
    EXPECT_GE(b, prev_sten);
    EXPECT_GE(a, 1);
    EXPECT_LE(a, 9);
    EXPECT_GE(b, 1);
    EXPECT_LE(b, 10);
    prev_stanine = a;
    prev_sten = b;
  }
  EXPECT_EQ(stanine(-kInf), 1);
  EXPECT_EQ(sten(kInf), 10);
}

TEST(ZScores, SampleNormedMomentsAndShape) {
  Rng rng(3);
  std::vector<double> raw;
  for (int i = 0; i < 500; ++i) raw.push_back(std::exp(rng.normal()));  // skewed
  auto z = z_scores(raw, NormReference::from_sample(raw));
  EXPECT_NEAR(mean(z), 0.0, 1e-10);
  EXPECT_NEAR(sample_sd(z), 1.0, 1e-10);
  EXPECT_NEAR(skewness(z), skewness(raw), 1e-10);
  EXPECT_GT(skewness(z), 1.0);
}

TEST(ZScores, TScoreOrderPreservingAffine) {
  std::vector<double> raw{3, 9, 1, 4, 4, 7};
  auto norm = NormReference::from_sample(raw);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = 0; j < raw.size(); ++j) {
      const double ti = t_score(z_score(raw[i], norm)), tj = t_score(z_score(raw[j], norm));
      if (raw[i] < raw[j]) EXPECT_LT(ti, tj);
      if (raw[i] == raw[j]) EXPECT_EQ(ti, tj);
    }
  }
}

TEST(Normalize, SqrtAndLog) {
  EXPECT_EQ(normalize(std::vector<double>{0, 1, 4, 9}, NormalizeTransform::sqrt),
            (std::vector<double>{0, 1, 2, 3}));
  auto l = normalize(std::vector<double>{1, std::exp(2.0)}, NormalizeTransform::log);
  EXPECT_EQ(l[0], 0.0);
  EXPECT_NEAR(l[1], 2.0, 1e-15);
}

TEST(Normalize, DomainErrorsNameTheValue) {
  try {
    normalize(std::vector<double>{1, -3.5}, NormalizeTransform::log);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("-3.5"), std::string::npos);
  }
  EXPECT_THROW(normalize(std::vector<double>{0}, NormalizeTransform::log), RangeError);
  EXPECT_THROW(normalize(std::vector<double>{-1e-9}, NormalizeTransform::sqrt), RangeError);
  EXPECT_THROW(parse_normalize_transform("cube"), UsageError);
}

TEST(Normalize, RankPreserving) {
  Rng rng(8);
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(rng.uniform() * 50);
  for (auto t : {NormalizeTransform::log, NormalizeTransform::sqrt}) {
    auto out = normalize(v, t);
    EXPECT_EQ(average_ranks(out), average_ranks(v));
  }
}
