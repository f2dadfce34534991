#include "psymeter/fairness.hpp"

#include "psymeter/error.hpp"
#include "psymeter/logistic.hpp"
#include "psymeter/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

namespace psymeter {

std::string_view to_string(DifMethod m) {
  switch (m) {
    case DifMethod::mh: return "mh";
    case DifMethod::logistic_uniform: return "logistic_uniform";
    case DifMethod::logistic_nonuniform: return "logistic_nonuniform";
  }
  return "unknown";
}

GroupFacilities facility_by_group(const ScoredTest& scored, std::span<const std::string> groups) {
  if (groups.size() != scored.n_participants()) {
    throw DataError("group labels do not match the number of participants");
  }
  std::map<std::string, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) {
      throw DataError("participant '" + scored.participants()[i] + "' has no group label");
    }
    members[groups[i]].push_back(static_cast<Eigen::Index>(i));
  }
  if (members.size() < 2) throw UsageError("facility comparison needs at least two groups");

  GroupFacilities out;
  out.items = scored.items();
  for (const auto& [level, _] : members) out.levels.push_back(level);
  const auto k = static_cast<Eigen::Index>(scored.n_items());
  const auto g = static_cast<Eigen::Index>(members.size());
  out.facility.resize(k, g);
  Eigen::Index col = 0;
  for (const auto& [level, rows] : members) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double s = 0.0;
      for (auto r : rows) s += scored.scores()(r, j);
      out.facility(j, col) = s / static_cast<double>(rows.size());
    }
    ++col;
  }
  out.max_difference = out.facility.rowwise().maxCoeff() - out.facility.rowwise().minCoeff();
  return out;
}

BinaryGroups BinaryGroups::from_labels(std::span<const std::string> labels,
                                       std::optional<std::string> reference) {
  std::set<std::string> levels;
  for (const auto& l : labels) {
    if (l.empty()) throw DataError("empty group label");
    levels.insert(l);
  }
  if (levels.size() != 2) {
    throw DataError("DIF analysis needs exactly two groups, found " + std::to_string(levels.size()));
  }
  BinaryGroups g;
  g.reference = reference.value_or(labels.front());
  if (!levels.count(g.reference)) throw UsageError("reference group '" + g.reference + "' not present");
  g.focal = *levels.begin() == g.reference ? *levels.rbegin() : *levels.begin();
  for (const auto& l : labels) g.membership.push_back(l == g.reference ? 0 : 1);
  return g;
}

BinaryGroups BinaryGroups::swapped() const {
  BinaryGroups g;
  g.reference = focal;
  g.focal = reference;
  for (int m : membership) g.membership.push_back(1 - m);
  return g;
}

double chi_square_1df_p(double statistic) {
  if (!(statistic > 0.0)) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

namespace {

void check_groups(const ScoredTest& scored, const BinaryGroups& groups) {
  if (groups.membership.size() != scored.n_participants()) {
    throw DataError("group membership does not match the number of participants");
  }
  const auto focal = std::count(groups.membership.begin(), groups.membership.end(), 1);
  if (focal == 0 || focal == static_cast<std::ptrdiff_t>(groups.membership.size())) {
    throw DataError("DIF analysis needs participants in both groups");
  }
}

Eigen::VectorXd dichotomous_column(const ScoredTest& scored, std::string_view item) {
  Eigen::VectorXd y = scored.column(item);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw DataError("item '" + std::string(item) +
                      "' is not dichotomous; dichotomize it explicitly before DIF analysis");
    }
  }
  return y;
}

}  // namespace

DifResult mantel_haenszel_dif(const ScoredTest& scored, const BinaryGroups& groups,
                              std::string_view item, const MhOptions& options) {
  check_groups(scored, groups);
  if (options.n_strata < 1) throw UsageError("MH: need at least one stratum");
  const Eigen::VectorXd y = dichotomous_column(scored, item);
  const Eigen::VectorXd rest = scored.totals() - y;

  std::vector<double> cuts;
  for (std::size_t s = 1; s < options.n_strata; ++s) {
    cuts.push_back(quantile(as_span(rest), static_cast<double>(s) / static_cast<double>(options.n_strata)));
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Per stratum: reference right/wrong, focal right/wrong.
  std::vector<std::array<double, 4>> tables(cuts.size() + 1, {0.0, 0.0, 0.0, 0.0});
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto stratum = static_cast<std::size_t>(
        std::count_if(cuts.begin(), cuts.end(), [&](double c) { return rest(i) > c; }));
    const int g = groups.membership[static_cast<std::size_t>(i)];
    const int cell = g * 2 + (y(i) == 1.0 ? 0 : 1);
    tables[stratum][static_cast<std::size_t>(cell)] += 1.0;
  }

  DifResult r;
  r.item = std::string(item);
  r.method = DifMethod::mh;
  double sum_a = 0.0, sum_ea = 0.0, sum_var = 0.0;
  for (const auto& [a, b, c, d] : tables) {
    const double n_ref = a + b, n_foc = c + d, right = a + c, wrong = b + d;
    const double t = n_ref + n_foc;
    if (t < 2.0 || n_ref == 0.0 || n_foc == 0.0 || right == 0.0 || wrong == 0.0) {
      if (t > 0.0) ++r.strata_dropped;
      continue;
    }
    ++r.strata_used;
    r.or_numerator += a * d / t;
    r.or_denominator += b * c / t;
    sum_a += a;
    sum_ea += n_ref * right / t;
    sum_var += n_ref * n_foc * right * wrong / (t * t * (t - 1.0));
  }
  if (r.strata_used == 0 || !(sum_var > 0.0)) {
    throw InsufficientDataError("MH: every stratum of item '" + r.item + "' is degenerate");
  }
  if (!(r.or_numerator > 0.0) || !(r.or_denominator > 0.0)) {
    throw InsufficientDataError("MH: common odds ratio of item '" + r.item + "' is 0 or unbounded");
  }
  r.effect = r.or_numerator / r.or_denominator;
  const double dev = std::max(0.0, std::abs(sum_a - sum_ea) - 0.5);
  r.statistic = dev * dev / sum_var;
  r.p_value = chi_square_1df_p(r.statistic);
  r.flagged = r.p_value < options.alpha;
  return r;
}

LogisticDifResult logistic_dif(const ScoredTest& scored, const BinaryGroups& groups,
                               std::string_view item, double alpha) {
  check_groups(scored, groups);
  const Eigen::VectorXd y = dichotomous_column(scored, item);
  const Eigen::Index n = y.size();
  const Eigen::VectorXd& total = scored.totals();
  const double m = total.mean();
  const double sd = std::sqrt((total.array() - m).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateInputError("logistic DIF: total score is constant");

  Eigen::MatrixXd x(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (total(i) - m) / sd;
    const double g = groups.membership[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = z;
    x(i, 2) = g;
    x(i, 3) = g * z;
  }
  LogisticFit f1, f2, f3;
  try {
    f1 = logistic_fit(x.leftCols(2), y);
    f2 = logistic_fit(x.leftCols(3), y);
    f3 = logistic_fit(x, y);
  } catch (const SeparationError& e) {
    throw SeparationError("logistic DIF for item '" + std::string(item) + "': " + e.what());
  }

  LogisticDifResult out;
  out.uniform.item = out.nonuniform.item = std::string(item);
  out.uniform.method = DifMethod::logistic_uniform;
  out.uniform.statistic = std::max(0.0, 2.0 * (f2.log_likelihood - f1.log_likelihood));
  out.uniform.p_value = chi_square_1df_p(out.uniform.statistic);
  out.uniform.effect = f2.coefficients(2);
  out.uniform.flagged = out.uniform.p_value < alpha;

  out.nonuniform.method = DifMethod::logistic_nonuniform;
  out.nonuniform.statistic = std::max(0.0, 2.0 * (f3.log_likelihood - f2.log_likelihood));
  out.nonuniform.p_value = chi_square_1df_p(out.nonuniform.statistic);
  out.nonuniform.effect = f3.coefficients(3);
  out.nonuniform.flagged = out.nonuniform.p_value < alpha;
  return out;
}

DtfSummary dtf_summary(std::span<const DifResult> results, double alpha, double threshold) {
  DtfSummary out;
  for (DifMethod m : {DifMethod::mh, DifMethod::logistic_uniform, DifMethod::logistic_nonuniform}) {
    DtfMethodSummary s;
    s.method = m;
    for (const auto& r : results) {
      if (r.method != m) continue;
      ++s.tested;
      if (r.p_value < alpha) ++s.flagged;
    }
    if (s.tested == 0) continue;
    s.proportion = static_cast<double>(s.flagged) / static_cast<double>(s.tested);
    out.warning = out.warning || s.proportion > threshold;
    out.methods.push_back(s);
  }
  return out;
}

ScoredTest dichotomize(const ScoredTest& scored, double threshold) {
  Eigen::MatrixXd d = (scored.scores().array() >= threshold).cast<double>();
  return ScoredTest(scored.participants(), scored.items(), std::move(d), scored.test_type(), 0.0,
                    1.0, scored.aux());
}

}  // namespace psymeter
