#include "psymeter/stats.hpp"

#include "psymeter/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace psymeter {

std::string_view to_string(CorrelationMethod m) {
  return m == CorrelationMethod::pearson ? "pearson" : "spearman";
}

CorrelationMethod parse_correlation_method(std::string_view s) {
  if (s == "pearson") return CorrelationMethod::pearson;
  if (s == "spearman") return CorrelationMethod::spearman;
  throw UsageError("unknown correlation method '" + std::string(s) +
                   "' (expected pearson|spearman)");
}

double mean(std::span<const double> x) {
  if (x.empty()) throw EmptyDatasetError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientDataError("variance needs at least two observations");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

double skewness(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  if (m2 <= 0.0) throw DegenerateInputError("skewness of a constant sample");
  return m3 / std::pow(m2, 1.5);
}

double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw EmptyDatasetError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("quantile probability outside [0, 1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Sum of squared deviations, treated as zero when it is at rounding level
// relative to the data magnitude.
bool is_constant(std::span<const double> x, double ss) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  return ss <= 1e-24 * static_cast<double>(x.size()) * std::max(1.0, scale * scale);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("correlation of vectors with different lengths");
  if (x.size() < 3) throw InsufficientDataError("correlation needs at least three pairs");
  // Deviations scaled by n: exact for integer scores, so reflecting either
  // vector negates the result bit for bit.
  const double n = static_cast<double>(x.size());
  const double sum_x = std::accumulate(x.begin(), x.end(), 0.0);
  const double sum_y = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = n * x[i] - sum_x, dy = n * y[i] - sum_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (is_constant(x, sxx / (n * n)) || is_constant(y, syy / (n * n))) {
    throw DegenerateInputError("correlation with a zero-variance vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("correlation of vectors with different lengths");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
  return method == CorrelationMethod::pearson ? pearson(x, y) : spearman(x, y);
}

std::size_t CorrelationMatrix::index_of(std::string_view item) const {
  auto it = std::find(items.begin(), items.end(), item);
  if (it == items.end()) throw UsageError("unknown item '" + std::string(item) + "'");
  return static_cast<std::size_t>(it - items.begin());
}

CorrelationMatrix correlation_matrix(const ScoredTest& scored, CorrelationMethod method) {
  const auto k = static_cast<Eigen::Index>(scored.n_items());
  if (scored.n_participants() < 3) {
    throw InsufficientDataError("correlation matrix needs at least three participants");
  }
  std::vector<Eigen::VectorXd> cols;
  cols.reserve(scored.n_items());
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd c = scored.scores().col(j);
    if (method == CorrelationMethod::spearman) {
      auto r = average_ranks(as_span(c));
      c = Eigen::Map<Eigen::VectorXd>(r.data(), c.size());
    }
    const double m = c.mean();
    c.array() -= m;
    const double ss = c.squaredNorm();
    Eigen::VectorXd raw = scored.scores().col(j);
    if (is_constant(as_span(raw), ss)) {
      throw DegenerateInputError("item '" + scored.items()[static_cast<std::size_t>(j)] +
                                 "' is constant");
    }
    cols.push_back(c / std::sqrt(ss));
  }
  CorrelationMatrix out{scored.items(), Eigen::MatrixXd::Identity(k, k)};
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      const double r = std::clamp(cols[static_cast<std::size_t>(a)].dot(
                                      cols[static_cast<std::size_t>(b)]),
                                  -1.0, 1.0);
      out.values(a, b) = r;
      out.values(b, a) = r;
    }
  }
  return out;
}

std::string render_lower_triangle(const CorrelationMatrix& c, int decimals) {
  std::size_t width = 5;
  for (const auto& it : c.items) width = std::max(width, it.size());
  const auto cell = static_cast<int>(std::max<std::size_t>(width, decimals + 4) + 1);
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "items";
  for (const auto& it : c.items) os << std::right << std::setw(cell) << it;
  os << '\n' << std::fixed << std::setprecision(decimals);
  for (std::size_t i = 0; i < c.size(); ++i) {
    os << std::left << std::setw(static_cast<int>(width)) << c.items[i];
    for (std::size_t j = 0; j <= i; ++j) {
      os << std::right << std::setw(cell)
         << c.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    os << '\n';
  }
  return os.str();
}

SmcResult smc_all(const CorrelationMatrix& c, bool allow_ridge) {
  const auto k = c.values.rows();
  Eigen::MatrixXd m = c.values;
  m.diagonal().setOnes();
  bool ridged = false;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) {
    if (!allow_ridge) {
      throw SingularMatrixError(
          "correlation matrix is singular; squared multiple correlations need an inverse "
          "(enable the ridge fallback)");
    }
    m.diagonal().array() += kSmcRidge;
    lu.compute(m);
    ridged = true;
  }
  Eigen::MatrixXd inv = lu.inverse();
  Eigen::VectorXd out(k);
  for (Eigen::Index i = 0; i < k; ++i) out(i) = std::clamp(1.0 - 1.0 / inv(i, i), 0.0, 1.0);
  return {out, ridged};
}

double smc(const CorrelationMatrix& c, std::string_view item) {
  return smc_all(c).values(static_cast<Eigen::Index>(c.index_of(item)));
}

}  // namespace psymeter
