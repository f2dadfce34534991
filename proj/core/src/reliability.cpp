#include "psymeter/reliability.hpp"

#include "psymeter/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace psymeter {

std::string_view to_string(ReliabilityKind k) {
  switch (k) {
    case ReliabilityKind::test_retest: return "test_retest";
    case ReliabilityKind::split_half: return "split_half";
    case ReliabilityKind::cronbach_alpha: return "cronbach_alpha";
    case ReliabilityKind::cohen_kappa: return "cohen_kappa";
    case ReliabilityKind::fleiss_kappa: return "fleiss_kappa";
    case ReliabilityKind::krippendorff_alpha: return "krippendorff_alpha";
  }
  return "unknown";
}

ReliabilityReport test_retest(const ScoredTest& t1, const ScoredTest& t2,
                              CorrelationMethod method) {
  std::unordered_map<std::string, std::size_t> second;
  for (std::size_t i = 0; i < t2.n_participants(); ++i) second[t2.participants()[i]] = i;

  std::vector<std::string> only_first, only_second;
  std::vector<double> a, b;
  for (std::size_t i = 0; i < t1.n_participants(); ++i) {
    const auto& id = t1.participants()[i];
    auto it = second.find(id);
    if (it == second.end()) {
      only_first.push_back(id);
      continue;
    }
    a.push_back(t1.totals()(static_cast<Eigen::Index>(i)));
    b.push_back(t2.totals()(static_cast<Eigen::Index>(it->second)));
  }
  std::set<std::string> first_ids(t1.participants().begin(), t1.participants().end());
  for (const auto& id : t2.participants()) {
    if (!first_ids.count(id)) only_second.push_back(id);
  }
  if (!only_first.empty() || !only_second.empty()) {
    std::string msg = "participant sets differ between administrations;";
    auto list = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" only in ") + label + ":";
      for (std::size_t i = 0; i < ids.size() && i < 10; ++i) msg += " " + ids[i];
      if (ids.size() > 10) msg += " ... (" + std::to_string(ids.size()) + " total)";
    };
    list("first", only_first);
    list("second", only_second);
    throw AlignmentError(msg);
  }

  ReliabilityReport r;
  r.kind = ReliabilityKind::test_retest;
  r.raw_value = correlate(a, b, method);
  r.value = std::max(0.0, r.raw_value);
  r.n = a.size();
  return r;
}

double spearman_brown(double r_half) {
  // 2r / (1 + r) with the rounding error of 1 + r and of the quotient folded
  // back in, so e.g. 0.6 gives exactly 0.75.
  const double num = 2.0 * r_half;
  const double den = 1.0 + r_half;
  if (den == 0.0) return num / den;
  const double den_err = std::abs(r_half) <= 1.0 ? (1.0 - den) + r_half : (r_half - den) + 1.0;
  const double q = num / den;
  const double rem = std::fma(-q, den, num);
  return q + (rem - q * den_err) / den;
}

ReliabilityReport split_half(const ScoredTest& scored) {
  if (scored.n_items() < 2) throw UsageError("split-half reliability needs at least two items");
  const auto n = static_cast<Eigen::Index>(scored.n_participants());
  ReliabilityReport r;
  r.kind = ReliabilityKind::split_half;
  r.n = scored.n_participants();
  r.odd_half.assign(static_cast<std::size_t>(n), 0.0);
  r.even_half.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 0; j < scored.scores().cols(); ++j) {
    auto& half = (j % 2 == 0) ? r.odd_half : r.even_half;  // item 1 is odd-numbered
    for (Eigen::Index i = 0; i < n; ++i) half[static_cast<std::size_t>(i)] += scored.scores()(i, j);
  }
  double rh = 0.0;
  try {
    rh = pearson(r.odd_half, r.even_half);
  } catch (const DegenerateInputError&) {
    throw DegenerateInputError("split-half: a half score is constant across participants");
  }
  r.half_correlation = rh;
  r.raw_value = spearman_brown(rh);
  r.value = r.raw_value;
  return r;
}

namespace {

double alpha_of(const Eigen::MatrixXd& scores) {
  const auto k = static_cast<double>(scores.cols());
  double item_var_sum = 0.0;
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    Eigen::VectorXd c = scores.col(j);
    item_var_sum += sample_variance(as_span(c));
  }
  Eigen::VectorXd total = scores.rowwise().sum();
  const double total_var = sample_variance(as_span(total));
  if (!(total_var > 0.0)) throw DegenerateInputError("Cronbach's alpha: total score has zero variance");
  return k / (k - 1.0) * (1.0 - item_var_sum / total_var);
}

}  // namespace

ReliabilityReport cronbach_alpha(const ScoredTest& scored) {
  if (scored.n_items() < 2) throw UsageError("Cronbach's alpha needs at least two items");
  if (scored.n_participants() < 3) {
    throw InsufficientDataError("Cronbach's alpha needs at least three participants");
  }
  ReliabilityReport r;
  r.kind = ReliabilityKind::cronbach_alpha;
  r.n = scored.n_participants();
  r.raw_value = alpha_of(scored.scores());
  r.value = r.raw_value;
  if (scored.n_items() >= 3) {
    const auto k = scored.scores().cols();
    for (Eigen::Index drop = 0; drop < k; ++drop) {
      Eigen::MatrixXd sub(scored.scores().rows(), k - 1);
      for (Eigen::Index j = 0, t = 0; j < k; ++j) {
        if (j != drop) sub.col(t++) = scored.scores().col(j);
      }
      try {
        r.alpha_if_deleted[scored.items()[static_cast<std::size_t>(drop)]] = alpha_of(sub);
      } catch (const DegenerateInputError&) {
        // Leaving this item out leaves a constant total; no value to report.
      }
    }
  }
  return r;
}

double cohen_kappa(std::span<const int> rater1, std::span<const int> rater2) {
  if (rater1.size() != rater2.size()) throw UsageError("Cohen's kappa: rating vectors differ in length");
  if (rater1.empty()) throw EmptyDatasetError("Cohen's kappa: no ratings");
  const auto n = static_cast<double>(rater1.size());
  std::map<int, double> m1, m2;
  double agree = 0.0;
  for (std::size_t i = 0; i < rater1.size(); ++i) {
    m1[rater1[i]] += 1.0;
    m2[rater2[i]] += 1.0;
    if (rater1[i] == rater2[i]) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [cat, count] : m1) {
    auto it = m2.find(cat);
    if (it != m2.end()) pe += (count / n) * (it->second / n);
  }
  if (pe >= 1.0) throw DegenerateInputError("Cohen's kappa: chance agreement is 1 (constant raters)");
  return (po - pe) / (1.0 - pe);
}

double fleiss_kappa(const std::vector<std::vector<int>>& ratings) {
  if (ratings.empty()) throw EmptyDatasetError("Fleiss' kappa: no subjects");
  const std::size_t m = ratings.front().size();
  if (m < 2) throw UsageError("Fleiss' kappa needs at least two raters per subject");
  std::map<int, double> category_totals;
  double p_bar = 0.0;
  for (const auto& subject : ratings) {
    if (subject.size() != m) throw UsageError("Fleiss' kappa: subjects have different rater counts");
    std::map<int, double> counts;
    for (int c : subject) counts[c] += 1.0;
    double sq = 0.0;
    for (const auto& [c, k] : counts) {
      sq += k * k;
      category_totals[c] += k;
    }
    const auto md = static_cast<double>(m);
    p_bar += (sq - md) / (md * (md - 1.0));
  }
  const auto n_subjects = static_cast<double>(ratings.size());
  p_bar /= n_subjects;
  const double total = n_subjects * static_cast<double>(m);
  double pe = 0.0;
  for (const auto& [c, k] : category_totals) pe += (k / total) * (k / total);
  if (pe >= 1.0) throw DegenerateInputError("Fleiss' kappa: a single category is used throughout");
  return (p_bar - pe) / (1.0 - pe);
}

double krippendorff_alpha(const std::vector<std::vector<std::optional<double>>>& ratings,
                          MeasurementLevel level) {
  // Distinct values, then the coincidence matrix over pairable values.
  std::map<double, std::size_t> index;
  for (const auto& unit : ratings) {
    for (const auto& v : unit) {
      if (v) index.emplace(*v, 0);
    }
  }
  std::vector<double> values;
  for (auto& [v, i] : index) {
    i = values.size();
    values.push_back(v);
  }
  const std::size_t c = values.size();
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  for (const auto& unit : ratings) {
    std::vector<std::size_t> present;
    for (const auto& v : unit) {
      if (v) present.push_back(index.at(*v));
    }
    if (present.size() < 2) continue;
    const double w = 1.0 / (static_cast<double>(present.size()) - 1.0);
    for (std::size_t a = 0; a < present.size(); ++a) {
      for (std::size_t b = 0; b < present.size(); ++b) {
        if (a != b) {
          o(static_cast<Eigen::Index>(present[a]), static_cast<Eigen::Index>(present[b])) += w;
        }
      }
    }
  }
  const double n = o.sum();
  if (n < 2.0) throw InsufficientDataError("Krippendorff's alpha: fewer than two pairable values");
  Eigen::VectorXd marg = o.rowwise().sum();

  auto delta = [&](std::size_t a, std::size_t b) {
    if (level == MeasurementLevel::nominal) return a == b ? 0.0 : 1.0;
    const double d = values[a] - values[b];
    return d * d;
  };
  double observed = 0.0, expected = 0.0;
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = 0; b < c; ++b) {
      const double d = delta(a, b);
      observed += o(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * d;
      expected += marg(static_cast<Eigen::Index>(a)) * marg(static_cast<Eigen::Index>(b)) * d;
    }
  }
  if (!(expected > 0.0)) {
    throw DegenerateInputError("Krippendorff's alpha: all pairable values are identical");
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

SemForm parse_sem_form(std::string_view s) {
  if (s == "conventional") return SemForm::conventional;
  if (s == "variance_scaled") return SemForm::variance_scaled;
  throw UsageError("unknown SEM form '" + std::string(s) + "' (expected conventional|variance_scaled)");
}

std::string_view to_string(SemForm f) {
  return f == SemForm::conventional ? "conventional" : "variance_scaled";
}

SemResult sem_from_sd(double test_sd, double reliability, SemForm form) {
  if (!(reliability >= 0.0 && reliability <= 1.0)) {
    throw UsageError("SEM: reliability must lie in [0, 1]");
  }
  SemResult out;
  out.form = form;
  out.sem = form == SemForm::conventional ? test_sd * std::sqrt(1.0 - reliability)
                                          : test_sd * test_sd * (1.0 - reliability);
  out.ci95_half_width = 1.96 * out.sem;
  return out;
}

SemResult sem(const ScoredTest& scored, double reliability, SemForm form) {
  return sem_from_sd(sample_sd(as_span(scored.totals())), reliability, form);
}

}  // namespace psymeter
