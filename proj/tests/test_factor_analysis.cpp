#include "fixtures.hpp"

#include <psymeter/eigen.hpp>
#include <psymeter/error.hpp>
#include <psymeter/factor_analysis.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace psymeter;
using psymeter::fixtures::simulated;
using psymeter::fixtures::three_factor_design;

namespace {

CorrelationMatrix matrix_of(const Eigen::MatrixXd& m) {
  return {item_names(static_cast<std::size_t>(m.rows())), m};
}

CorrelationMatrix sample_correlations(const FactorModelSpec& spec) {
  return correlation_matrix(simulated(spec));
}

Eigen::MatrixXd rotation2(double angle) {
  Eigen::MatrixXd r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

FactorSolution solution_from(const Eigen::MatrixXd& loadings) {
  FactorSolution s;
  s.items = item_names(static_cast<std::size_t>(loadings.rows()));
  s.loadings = loadings;
  s.communalities = loadings.rowwise().squaredNorm();
  s.uniquenesses = Eigen::VectorXd::Ones(loadings.rows()) - s.communalities;
  const auto f = loadings.cols();
  s.factor_correlations = Eigen::MatrixXd::Identity(f, f);
  s.rotation_matrix = Eigen::MatrixXd::Identity(f, f);
  s.heywood.assign(s.items.size(), false);
  return s;
}

// Largest |difference| after matching columns of `a` to `b` up to sign and
// permutation (greedy on congruence).
double match_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<bool> used(static_cast<std::size_t>(b.cols()), false);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::Index best = -1;
    double best_abs = -1.0, best_sign = 1.0;
    for (Eigen::Index k = 0; k < b.cols(); ++k) {
      if (used[static_cast<std::size_t>(k)]) continue;
      const double c = tucker_congruence(a.col(j), b.col(k));
      if (std::abs(c) > best_abs) {
        best_abs = std::abs(c);
        best = k;
        best_sign = c < 0 ? -1.0 : 1.0;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    worst = std::max(worst, (a.col(j) - best_sign * b.col(best)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST(Pca, TwoItemClosedForm) {
  auto sol = pca(matrix_of(equicorrelation(2, 0.5)), 1);
  const double expected = std::sqrt(1.5) / std::sqrt(2.0);
  EXPECT_NEAR(sol.loadings(0, 0), expected, 1e-14);
  EXPECT_NEAR(sol.loadings(1, 0), expected, 1e-14);
  EXPECT_NEAR(expected, 0.866, 5e-4);
  EXPECT_EQ(sol.method, ExtractionMethod::pca);
}

TEST(Pca, IdentityHasNoDominantComponent) {
  auto sol = pca(matrix_of(Eigen::MatrixXd::Identity(4, 4)), 2);
  EXPECT_EQ(sol.eigenvalues, Eigen::VectorXd::Ones(4));
  EXPECT_EQ(extract_k1(sol.eigenvalues), 0u);
}

TEST(Pca, EigenvaluesSumToItemsAndFullReconstruction) {
  auto c = sample_correlations(three_factor_design(3));
  auto sol = pca(c, 12);
  EXPECT_NEAR(sol.eigenvalues.sum(), 12.0, 1e-10);
  EXPECT_LE((sol.model_matrix() - c.values).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(sol.explained_variance().sum(), 12.0 + 1e-10);
}

TEST(Pca, FactorCountChecked) {
  auto c = matrix_of(equicorrelation(3, 0.2));
  EXPECT_THROW(pca(c, 0), UsageError);
  EXPECT_THROW(pca(c, 4), UsageError);
}

TEST(Paf, RecoversOneFactorCommunalities) {
  FactorModelSpec spec;
  spec.loadings = simple_structure(1, 6, 0.8);
  spec.factor_correlations = Eigen::MatrixXd::Identity(1, 1);
  spec.n = 1000;
  spec.seed = 17;
  auto sol = paf(sample_correlations(spec), 1);
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(sol.communalities(i), 0.64, 0.05);
  EXPECT_EQ(sol.method, ExtractionMethod::paf);
}

TEST(Paf, VarianceDecompositionInvariants) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto sol = paf(sample_correlations(three_factor_design(seed)), 3);
    for (Eigen::Index i = 0; i < sol.communalities.size(); ++i) {
      EXPECT_EQ(sol.uniquenesses(i), 1.0 - sol.communalities(i));
      EXPECT_GE(sol.communalities(i), 0.0);
      EXPECT_LE(sol.communalities(i), 1.0);
      if (!sol.heywood[static_cast<std::size_t>(i)]) {
        EXPECT_NEAR(sol.communalities(i), sol.loadings.row(i).squaredNorm(), 1e-10);
      }
    }
    const Eigen::VectorXd ev = sol.explained_variance();
    for (Eigen::Index j = 1; j < ev.size(); ++j) EXPECT_GE(ev(j - 1), ev(j));
    EXPECT_LE(ev.sum(), 12.0);
  }
}

TEST(Paf, ConvergedDiagonalIsFixedPoint) {
  auto c = sample_correlations(three_factor_design(5));
  auto sol = paf(c, 3, {1e-10, 500, true});
  Eigen::MatrixXd reduced = c.values;
  reduced.diagonal() = sol.communalities;
  const auto es = eigen_symmetric(reduced);
  for (Eigen::Index i = 0; i < 12; ++i) {
    double h2 = 0.0;
    for (Eigen::Index j = 0; j < 3; ++j) h2 += es.values(j) * es.vectors(i, j) * es.vectors(i, j);
    EXPECT_NEAR(h2, sol.communalities(i), 1e-8);
  }
}

TEST(Paf, NearDuplicatePairRaisesHeywood) {
  // Items 1 and 2 correlate 0.99 and share a factor with no other indicator,
  // so the second factor tends to push their communality past 1.
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(8, 2);
  l.col(0).setConstant(0.6);
  l(0, 0) = l(1, 0) = 0.5;
  l(0, 1) = l(1, 1) = 0.86;
  int flagged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    FactorModelSpec spec;
    spec.loadings = l;
    spec.factor_correlations = Eigen::MatrixXd::Identity(2, 2);
    spec.n = 300;
    spec.seed = seed;
    EXPECT_NEAR(spec.implied_correlations()(0, 1), 0.99, 1e-3);
    auto sol = paf(sample_correlations(spec), 2, {1e-6, 1000, true});
    EXPECT_LE(sol.communalities.maxCoeff(), 1.0);
    for (std::size_t i = 0; i < 8; ++i) {
      if (sol.heywood[i]) EXPECT_EQ(sol.communalities(static_cast<Eigen::Index>(i)), 1.0);
    }
    if (sol.heywood[0] || sol.heywood[1]) {
      ++flagged;
      EXPECT_FALSE(sol.notices.empty());
    }
  }
  EXPECT_GE(flagged, 10);
}

TEST(Paf, IterationLimitCarriesLastIterate) {
  auto c = sample_correlations(three_factor_design(6));
  try {
    paf(c, 3, {1e-15, 2, true});
    FAIL();
  } catch (const PafIterationLimit& e) {
    EXPECT_EQ(e.last_iterate().iterations, 2);
    EXPECT_EQ(e.last_iterate().loadings.cols(), 3);
  }
}

TEST(Extraction, KaiserRule) {
  EXPECT_EQ(extract_k1(Eigen::Vector3d(2.1, 1.05, 0.9)), 2u);
  EXPECT_EQ(extract_k1(Eigen::Vector3d(1, 1, 1)), 0u);
  Eigen::VectorXd e(5);
  e << 3.2, 1.2, 0.8, 0.5, 0.3;
  EXPECT_EQ(extract_k1(e), 2u);
}

TEST(Extraction, ScreeTable) {
  auto flat = scree_data(Eigen::VectorXd::Ones(4));
  ASSERT_EQ(flat.size(), 4u);
  EXPECT_EQ(flat[3].index, 4u);
  for (const auto& row : flat) EXPECT_EQ(row.eigenvalue, 1.0);

  auto c = sample_correlations(three_factor_design(2));
  auto rows = scree_data(eigen_symmetric(c.values).values);
  ASSERT_EQ(rows.size(), 12u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i - 1].eigenvalue, rows[i].eigenvalue);
  EXPECT_GT(rows[2].eigenvalue / rows[3].eigenvalue, 2.0);
}

TEST(Extraction, ScreeCsvAndSvg) {
  auto rows = scree_data(Eigen::Vector3d(2.0, 0.7, 0.3));
  rows[0].random_mean = 1.2;
  std::ostringstream csv;
  write_scree_csv(csv, rows);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "index,eigenvalue,random_mean,random_p95");
  EXPECT_NE(text.find("\n1,2,1.2,\n"), std::string::npos);
  EXPECT_NE(text.find("\n3,0.29999999999999999,,\n"), std::string::npos);
  const auto svg = render_scree_svg(rows);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Vss, OneFactorPeaksAtOne) {
  FactorModelSpec spec;
  spec.loadings = simple_structure(1, 8, 0.7);
  spec.factor_correlations = Eigen::MatrixXd::Identity(1, 1);
  spec.n = 500;
  spec.seed = 31;
  auto table = vss(sample_correlations(spec), 4);
  ASSERT_EQ(table.size(), 4u);
  auto best = std::max_element(table.begin(), table.end(),
                               [](auto& a, auto& b) { return a.criterion < b.criterion; });
  EXPECT_EQ(best->k, 1u);
  for (const auto& row : table) {
    EXPECT_GE(row.criterion, 0.0);
    EXPECT_LE(row.criterion, 1.0);
  }
}

TEST(Vss, ThreeFactorArgmaxAcrossSeeds) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto table = vss(sample_correlations(three_factor_design(seed)), 6);
    auto best = std::max_element(table.begin(), table.end(),
                                 [](auto& a, auto& b) { return a.criterion < b.criterion; });
    if (best->k == 3) ++hits;
  }
  EXPECT_GE(hits, 90);
}

TEST(Vss, MaxKBound) {
  auto c = matrix_of(equicorrelation(6, 0.3));
  EXPECT_THROW(vss(c, 4), UsageError);
  EXPECT_THROW(vss(c, 0), UsageError);
}

TEST(Parallel, ThreeFactorsRetained) {
  int hits = 0;
  const int seeds = 40;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    ParallelOptions o;
    o.replicates = 200;
    o.seed = 1000 + seed;
    if (parallel_analysis(simulated(three_factor_design(seed)), o).retained == 3) ++hits;
  }
  EXPECT_GE(hits, static_cast<int>(std::ceil(0.95 * seeds)));
}

TEST(Parallel, NoiseRetainsNothingAtP95) {
  int hits = 0;
  const int seeds = 40;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    ParallelOptions o;
    o.replicates = 200;
    o.criterion = ParallelCriterion::p95;
    o.seed = 5000 + seed;
    if (parallel_analysis(simulated(fixtures::noise_design(12, 300, seed)), o).retained == 0) ++hits;
  }
  EXPECT_GE(hits, static_cast<int>(std::ceil(0.9 * seeds)));
}

TEST(Parallel, DeterministicAndThreadIndependent) {
  auto s = simulated(three_factor_design(9));
  ParallelOptions o;
  o.replicates = 150;
  o.seed = 77;
  o.threads = 1;
  auto a = parallel_analysis(s, o);
  o.threads = 4;
  auto b = parallel_analysis(s, o);
  auto c = parallel_analysis(s, o);
  EXPECT_EQ(a.retained, b.retained);
  EXPECT_EQ(a.random_mean, b.random_mean);
  EXPECT_EQ(a.random_p95, b.random_p95);
  EXPECT_EQ(b.random_mean, c.random_mean);
  o.seed = 78;
  EXPECT_NE(parallel_analysis(s, o).random_mean, a.random_mean);
}

TEST(Parallel, Preconditions) {
  ParallelOptions o;
  o.replicates = 99;
  EXPECT_THROW(parallel_analysis(Eigen::Vector3d(2, 1, 0), 50, o), UsageError);
}

TEST(Advice, ChoosesParallelCountByDefault) {
  auto s = simulated(three_factor_design(12));
  auto c = correlation_matrix(s);
  ExtractionOptions o;
  o.parallel.replicates = 200;
  auto advice = advise_extraction(s, c, o);
  EXPECT_EQ(advice.chosen_by, "parallel");
  EXPECT_EQ(advice.chosen_count, advice.parallel_count);
  EXPECT_EQ(advice.chosen_count, 3u);
  EXPECT_EQ(advice.scree.size(), 12u);
  EXPECT_TRUE(advice.scree[0].random_p95.has_value());
  EXPECT_EQ(advice.vss_table.size(), 6u);
  EXPECT_LE(advice.k1_count, 12u);

  o.n_factors = 2;
  EXPECT_EQ(advise_extraction(s, c, o).chosen_by, "config");
  o.n_factors.reset();
  o.choose = "bogus";
  EXPECT_THROW(advise_extraction(s, c, o), UsageError);
}

TEST(Varimax, SimpleStructureIsFixedPoint) {
  const Eigen::MatrixXd l = simple_structure(3, 4, 0.7);
  auto rot = rotate_varimax(solution_from(l));
  EXPECT_LE(match_error(rot.loadings, l), 1e-10);
  EXPECT_EQ(rot.rotation, Rotation::varimax);
  EXPECT_EQ(rot.factor_correlations, Eigen::MatrixXd::Identity(3, 3));
}

TEST(Varimax, RecoversRotatedSimpleStructure) {
  const Eigen::MatrixXd l = simple_structure(2, 4, 0.7);
  const Eigen::MatrixXd mixed = l * rotation2(std::numbers::pi / 4);
  for (bool kaiser : {true, false}) {
    auto rot = rotate_varimax(solution_from(mixed), {kaiser, 1e-10, 1000});
    EXPECT_LE(match_error(rot.loadings, l), 1e-6);
  }
}

TEST(Varimax, PreservesCommunalitiesAndModel) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto sol = paf(sample_correlations(three_factor_design(seed)), 3);
    std::vector<double> trace;
    auto rot = rotate_varimax(sol, {}, &trace);
    const Eigen::VectorXd before = sol.loadings.rowwise().squaredNorm();
    const Eigen::VectorXd after = rot.loadings.rowwise().squaredNorm();
    EXPECT_LE((before - after).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((sol.model_matrix() - rot.model_matrix()).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1] - 1e-15);
    EXPECT_LE((sol.loadings * rot.rotation_matrix - rot.loadings).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::VectorXd ev = rot.explained_variance();
    for (Eigen::Index j = 1; j < ev.size(); ++j) EXPECT_GE(ev(j - 1), ev(j));
    for (Eigen::Index j = 0; j < 3; ++j) {
      Eigen::Index arg;
      rot.loadings.col(j).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(rot.loadings(arg, j), 0.0);
    }
  }
}

TEST(Varimax, SingleFactorUnchangedWithNotice) {
  auto sol = solution_from(simple_structure(1, 4, 0.6));
  auto rot = rotate_varimax(sol);
  EXPECT_EQ(rot.loadings, sol.loadings);
  EXPECT_EQ(rot.notices.size(), 1u);
}

TEST(Promax, UncorrelatedFactorsStayNearIdentity) {
  auto rot = rotate_promax(paf(sample_correlations(three_factor_design(41, 2000)), 3));
  const Eigen::MatrixXd& phi = rot.factor_correlations;
  EXPECT_EQ(rot.rotation, Rotation::promax);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(phi(i, i), 1.0);
    for (Eigen::Index j = 0; j < i; ++j) {
      EXPECT_LT(std::abs(phi(i, j)), 0.1);
      EXPECT_EQ(phi(i, j), phi(j, i));
    }
  }
}

TEST(Promax, RecoversFactorCorrelation) {
  FactorModelSpec spec;
  spec.loadings = simple_structure(2, 5, 0.7);
  spec.factor_correlations = equicorrelation(2, 0.5);
  spec.n = 1000;
  spec.seed = 43;
  auto sol = paf(sample_correlations(spec), 2);
  auto rot = rotate_promax(sol);
  EXPECT_NEAR(rot.factor_correlations(0, 1), 0.5, 0.1);
  EXPECT_LE((sol.model_matrix() - rot.model_matrix()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Promax, PowerBelowTwoRejected) {
  auto sol = solution_from(simple_structure(2, 3, 0.6));
  EXPECT_THROW(rotate_promax(sol, 1), UsageError);
}

TEST(Loadings, CrossloadingOrphanUnderidentified) {
  auto clean = crossloading_flags(solution_from(simple_structure(3, 4, 0.7)));
  for (const auto& f : clean.items) EXPECT_TRUE(f.empty());
  for (bool u : clean.underidentified) EXPECT_FALSE(u);

  Eigen::MatrixXd l = simple_structure(2, 4, 0.7);
  l(0, 1) = 0.4;
  l(0, 0) = 0.4;
  l(7, 1) = 0.1;
  l(6, 1) = 0.2;
  auto flags = crossloading_flags(solution_from(l));
  EXPECT_EQ(flags.items[0], std::vector<LoadingFlag>{LoadingFlag::crossloading});
  EXPECT_EQ(flags.items[7], std::vector<LoadingFlag>{LoadingFlag::orphan});
  EXPECT_EQ(flags.items[6], std::vector<LoadingFlag>{LoadingFlag::orphan});
  // Second factor: the 0.4 crossloading plus two intact indicators.
  EXPECT_EQ(flags.salient_counts[1], 3u);
  EXPECT_FALSE(flags.underidentified[1]);

  Eigen::MatrixXd two = simple_structure(2, 3, 0.7);
  two(2, 1) = two(2, 0);
  two(2, 0) = 0.0;
  auto under = crossloading_flags(solution_from(two));
  EXPECT_TRUE(under.underidentified[0]);
  EXPECT_FALSE(under.underidentified[1]);
}

TEST(Loadings, TuckerCongruence) {
  EXPECT_DOUBLE_EQ(tucker_congruence(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(2, 4, 6)), 1.0);
  EXPECT_DOUBLE_EQ(tucker_congruence(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), 0.0);
  EXPECT_THROW(tucker_congruence(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 1)), DegenerateInputError);
}
