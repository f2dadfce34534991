#include "psymeter/simulator.hpp"

#include "psymeter/error.hpp"
#include "psymeter/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace psymeter {

void FactorModelSpec::validate() const {
  const auto f = loadings.cols();
  if (loadings.rows() == 0 || f == 0) throw UsageError("factor model: empty loading matrix");
  if (factor_correlations.rows() != f || factor_correlations.cols() != f) {
    throw UsageError("factor model: factor correlation matrix must be factors x factors");
  }
  for (Eigen::Index i = 0; i < f; ++i) {
    if (std::abs(factor_correlations(i, i) - 1.0) > 1e-12) {
      throw UsageError("factor model: factor correlations need a unit diagonal");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(factor_correlations(i, j) - factor_correlations(j, i)) > 1e-12) {
        throw UsageError("factor model: factor correlations must be symmetric");
      }
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(factor_correlations);
  if (llt.info() != Eigen::Success) {
    throw UsageError("factor model: factor correlations are not positive-definite");
  }
  const Eigen::VectorXd h2 = communalities();
  for (Eigen::Index i = 0; i < h2.size(); ++i) {
    if (h2(i) > 1.0 + 1e-12) {
      throw UsageError("factor model: implied communality of item " + std::to_string(i + 1) +
                       " exceeds 1");
    }
  }
  if (likert && likert->min >= likert->max) {
    throw UsageError("factor model: Likert min must be below max");
  }
}

Eigen::VectorXd FactorModelSpec::communalities() const {
  return (loadings * factor_correlations * loadings.transpose()).diagonal();
}

Eigen::MatrixXd FactorModelSpec::implied_correlations() const {
  Eigen::MatrixXd r = loadings * factor_correlations * loadings.transpose();
  r.diagonal().setOnes();
  return r;
}

void TrueScoreSpec::validate() const {
  if (n < 3) throw UsageError("true-score model: need at least three participants");
  if (!(true_variance > 0.0) || !(error_variance > 0.0)) {
    throw UsageError("true-score model: variances must be positive");
  }
}

Eigen::MatrixXd simple_structure(std::size_t n_factors, std::size_t items_per_factor,
                                 double loading) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_factors * items_per_factor),
                                            static_cast<Eigen::Index>(n_factors));
  for (std::size_t f = 0; f < n_factors; ++f) {
    for (std::size_t i = 0; i < items_per_factor; ++i) {
      l(static_cast<Eigen::Index>(f * items_per_factor + i), static_cast<Eigen::Index>(f)) = loading;
    }
  }
  return l;
}

Eigen::MatrixXd equicorrelation(std::size_t size, double r) {
  const auto s = static_cast<Eigen::Index>(size);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(s, s, r);
  m.diagonal().setOnes();
  return m;
}

namespace {

std::vector<std::string> numbered(const char* prefix, std::size_t count) {
  int width = 2;
  for (std::size_t c = count; c >= 100; c /= 10) ++width;
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    auto digits = std::to_string(i);
    if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
    out.push_back(prefix + digits);
  }
  return out;
}

struct FactorParts {
  Eigen::MatrixXd common;  // F Lambda^T
  Eigen::MatrixXd unique;  // E diag(psi)
};

// Column streams: factor f draws from sub-stream f, item j's error from
// sub-stream (factors + j).
FactorParts generate_parts(const FactorModelSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto k = spec.loadings.rows();
  const auto f = spec.loadings.cols();

  Eigen::MatrixXd z(n, f);
  for (Eigen::Index c = 0; c < f; ++c) {
    auto rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(c));
    for (Eigen::Index i = 0; i < n; ++i) z(i, c) = rng.normal();
  }
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(spec.factor_correlations).matrixL();
  const Eigen::MatrixXd factors = z * chol.transpose();

  const Eigen::VectorXd h2 = spec.communalities();
  Eigen::MatrixXd unique(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double psi = std::sqrt(std::max(0.0, 1.0 - h2(j)));
    auto rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(f + j));
    for (Eigen::Index i = 0; i < n; ++i) unique(i, j) = psi * rng.normal();
  }
  return {factors * spec.loadings.transpose(), std::move(unique)};
}

// Equal-probability normal thresholds for a unit-variance continuous score.
std::vector<double> likert_thresholds(const LikertBounds& b) {
  const int categories = b.max - b.min + 1;
  boost::math::normal_distribution<double> std_normal;
  std::vector<double> t;
  for (int c = 1; c < categories; ++c) {
    t.push_back(boost::math::quantile(std_normal, static_cast<double>(c) / categories));
  }
  return t;
}

ResponseMatrix to_responses(const Eigen::MatrixXd& x, const std::optional<LikertBounds>& likert,
                            AuxColumns aux = {}) {
  std::vector<std::optional<double>> cells;
  cells.reserve(static_cast<std::size_t>(x.size()));
  std::vector<double> thresholds;
  if (likert) thresholds = likert_thresholds(*likert);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double v = x(i, j);
      if (likert) {
        const auto above = std::count_if(thresholds.begin(), thresholds.end(),
                                         [&](double t) { return v > t; });
        v = static_cast<double>(likert->min) + static_cast<double>(above);
      }
      cells.emplace_back(v);
    }
  }
  return ResponseMatrix(participant_names(static_cast<std::size_t>(x.rows())),
                        item_names(static_cast<std::size_t>(x.cols())), std::move(cells),
                        std::move(aux));
}

}  // namespace

std::vector<std::string> item_names(std::size_t count) { return numbered("item", count); }

std::vector<std::string> participant_names(std::size_t count) {
  auto ids = numbered("p", count);
  // Wider padding keeps IDs sortable for typical sample sizes.
  for (auto& id : ids) {
    while (id.size() < 5) id.insert(1, "0");
  }
  return ids;
}

Eigen::MatrixXd generate_factor_scores(const FactorModelSpec& spec) {
  auto parts = generate_parts(spec);
  return parts.common + parts.unique;
}

ResponseMatrix generate_factor_data(const FactorModelSpec& spec) {
  return to_responses(generate_factor_scores(spec), spec.likert);
}

std::pair<ScoredTest, ScoredTest> generate_retest_pair(const TrueScoreSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  auto true_rng = Rng::substream(spec.seed, 0);
  auto err1 = Rng::substream(spec.seed, 1);
  auto err2 = Rng::substream(spec.seed, 2);
  const double sd_t = std::sqrt(spec.true_variance);
  const double sd_e = std::sqrt(spec.error_variance);
  Eigen::MatrixXd x1(n, 1), x2(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = sd_t * true_rng.normal();
    x1(i, 0) = t + sd_e * err1.normal();
    x2(i, 0) = t + sd_e * err2.normal();
  }
  const double lo = std::min(x1.minCoeff(), x2.minCoeff());
  const double hi = std::max(x1.maxCoeff(), x2.maxCoeff());
  auto ids = participant_names(spec.n);
  return {ScoredTest(ids, {"score"}, std::move(x1), TestType::person, lo, hi),
          ScoredTest(ids, {"score"}, std::move(x2), TestType::person, lo, hi)};
}

std::string_view to_string(DifKind k) { return k == DifKind::uniform ? "uniform" : "nonuniform"; }

DifKind parse_dif_kind(std::string_view s) {
  if (s == "uniform") return DifKind::uniform;
  if (s == "nonuniform") return DifKind::nonuniform;
  throw UsageError("unknown DIF kind '" + std::string(s) + "' (expected uniform|nonuniform)");
}

DifDataset generate_dif_data(const FactorModelSpec& base, const std::vector<std::string>& dif_items,
                             DifKind kind, double magnitude, double group_split) {
  if (!(group_split > 0.0 && group_split < 1.0)) {
    throw UsageError("DIF simulation: group_split must lie in (0, 1)");
  }
  const auto names = item_names(static_cast<std::size_t>(base.loadings.rows()));
  std::vector<Eigen::Index> columns;
  for (const auto& item : dif_items) {
    auto it = std::find(names.begin(), names.end(), item);
    if (it == names.end()) throw UsageError("DIF simulation: unknown item '" + item + "'");
    columns.push_back(it - names.begin());
  }

  auto parts = generate_parts(base);
  const auto n = static_cast<Eigen::Index>(base.n);
  const auto n_ref = static_cast<Eigen::Index>(std::llround(static_cast<double>(base.n) * group_split));
  Eigen::MatrixXd x = parts.common + parts.unique;
  for (auto j : columns) {
    for (Eigen::Index i = n_ref; i < n; ++i) {
      if (kind == DifKind::uniform) {
        x(i, j) += magnitude;
      } else {
        x(i, j) = (1.0 + magnitude) * parts.common(i, j) + parts.unique(i, j);
      }
    }
  }

  DifDataset out;
  out.groups.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::string> labels(static_cast<std::size_t>(n), "reference");
  for (Eigen::Index i = n_ref; i < n; ++i) {
    out.groups[static_cast<std::size_t>(i)] = 1;
    labels[static_cast<std::size_t>(i)] = "focal";
  }
  AuxColumns aux;
  aux[std::string(kSimulatedGroupColumn)] = std::move(labels);
  out.responses = to_responses(x, base.likert, std::move(aux));
  out.degenerate = magnitude == 0.0 && !dif_items.empty();
  return out;
}

}  // namespace psymeter
