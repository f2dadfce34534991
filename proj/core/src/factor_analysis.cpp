#include "psymeter/factor_analysis.hpp"

#include "psymeter/eigen.hpp"
#include "psymeter/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace psymeter {

std::string_view to_string(ExtractionMethod m) { return m == ExtractionMethod::pca ? "pca" : "paf"; }

std::string_view to_string(Rotation r) {
  switch (r) {
    case Rotation::none: return "none";
    case Rotation::varimax: return "varimax";
    case Rotation::promax: return "promax";
  }
  return "unknown";
}

ExtractionMethod parse_extraction_method(std::string_view s) {
  if (s == "pca") return ExtractionMethod::pca;
  if (s == "paf") return ExtractionMethod::paf;
  throw UsageError("unknown extraction method '" + std::string(s) + "' (expected pca|paf)");
}

Rotation parse_rotation(std::string_view s) {
  if (s == "none") return Rotation::none;
  if (s == "varimax") return Rotation::varimax;
  if (s == "promax") return Rotation::promax;
  throw UsageError("unknown rotation '" + std::string(s) + "' (expected none|varimax|promax)");
}

std::string_view to_string(ParallelCriterion c) { return c == ParallelCriterion::mean ? "mean" : "p95"; }

ParallelCriterion parse_parallel_criterion(std::string_view s) {
  if (s == "mean") return ParallelCriterion::mean;
  if (s == "p95") return ParallelCriterion::p95;
  throw UsageError("unknown parallel-analysis criterion '" + std::string(s) + "' (expected mean|p95)");
}

std::string_view to_string(LoadingFlag f) { return f == LoadingFlag::crossloading ? "crossloading" : "orphan"; }

Eigen::VectorXd FactorSolution::explained_variance() const {
  return loadings.array().square().colwise().sum().transpose();
}

Eigen::MatrixXd FactorSolution::model_matrix() const {
  return loadings * factor_correlations * loadings.transpose();
}

namespace {

void check_factor_count(const CorrelationMatrix& c, std::size_t n_factors) {
  if (n_factors < 1 || n_factors > c.size()) {
    throw UsageError("number of factors must lie in [1, " + std::to_string(c.size()) + "]");
  }
}

Eigen::MatrixXd loadings_from(const EigenSystem& es, std::size_t n_factors) {
  const auto k = static_cast<Eigen::Index>(n_factors);
  Eigen::MatrixXd l = es.vectors.leftCols(k);
  for (Eigen::Index j = 0; j < k; ++j) l.col(j) *= std::sqrt(std::max(0.0, es.values(j)));
  return l;
}

// Orders columns by explained variance (descending) and makes each column's
// largest-magnitude loading positive. Applies the same permutation and signs
// to the rotation matrix and factor correlations.
void canonicalize(FactorSolution& sol) {
  const auto f = sol.loadings.cols();
  const Eigen::VectorXd ev = sol.explained_variance();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(f));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ev(a) > ev(b); });

  Eigen::MatrixXd l(sol.loadings.rows(), f), t(sol.rotation_matrix.rows(), f), phi(f, f);
  Eigen::VectorXd sign(f);
  for (Eigen::Index j = 0; j < f; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    Eigen::Index arg = 0;
    sol.loadings.col(src).cwiseAbs().maxCoeff(&arg);
    sign(j) = sol.loadings(arg, src) < 0.0 ? -1.0 : 1.0;
    l.col(j) = sign(j) * sol.loadings.col(src);
    t.col(j) = sign(j) * sol.rotation_matrix.col(src);
  }
  for (Eigen::Index a = 0; a < f; ++a) {
    for (Eigen::Index b = 0; b < f; ++b) {
      phi(a, b) = sign(a) * sign(b) *
                  sol.factor_correlations(order[static_cast<std::size_t>(a)],
                                          order[static_cast<std::size_t>(b)]);
    }
  }
  sol.loadings = std::move(l);
  sol.rotation_matrix = std::move(t);
  sol.factor_correlations = std::move(phi);
}

}  // namespace

FactorSolution pca(const CorrelationMatrix& c, std::size_t n_factors) {
  check_factor_count(c, n_factors);
  const auto es = eigen_symmetric(c.values);
  FactorSolution sol;
  sol.items = c.items;
  sol.method = ExtractionMethod::pca;
  sol.loadings = loadings_from(es, n_factors);
  sol.communalities = sol.loadings.rowwise().squaredNorm();
  sol.uniquenesses = Eigen::VectorXd::Ones(sol.communalities.size()) - sol.communalities;
  sol.eigenvalues = es.values;
  const auto f = static_cast<Eigen::Index>(n_factors);
  sol.factor_correlations = Eigen::MatrixXd::Identity(f, f);
  sol.rotation_matrix = Eigen::MatrixXd::Identity(f, f);
  sol.heywood.assign(c.size(), false);
  return sol;
}

FactorSolution paf(const CorrelationMatrix& c, std::size_t n_factors, const PafOptions& options) {
  check_factor_count(c, n_factors);
  const auto k = static_cast<Eigen::Index>(c.size());
  const auto f = static_cast<Eigen::Index>(n_factors);

  FactorSolution sol;
  sol.items = c.items;
  sol.method = ExtractionMethod::paf;
  sol.factor_correlations = Eigen::MatrixXd::Identity(f, f);
  sol.rotation_matrix = Eigen::MatrixXd::Identity(f, f);
  sol.heywood.assign(c.size(), false);

  auto start = smc_all(c, options.allow_ridge);
  if (start.ridge_applied) {
    sol.notices.push_back("correlation matrix singular: ridge " + std::to_string(kSmcRidge) +
                          " added to the diagonal for initial communalities");
  }
  Eigen::VectorXd h2 = start.values;
  Eigen::MatrixXd reduced = c.values;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    reduced.diagonal() = h2;
    const auto es = eigen_symmetric(reduced);
    Eigen::MatrixXd l = loadings_from(es, n_factors);
    Eigen::VectorXd next = l.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (next(i) > 1.0) {
        next(i) = 1.0;
        sol.heywood[static_cast<std::size_t>(i)] = true;
      }
    }
    const double change = (next - h2).cwiseAbs().maxCoeff();
    h2 = next;
    sol.loadings = std::move(l);
    sol.eigenvalues = es.values;
    sol.communalities = h2;
    sol.uniquenesses = Eigen::VectorXd::Ones(k) - h2;
    sol.iterations = iter;
    if (change < options.tolerance) {
      if (std::any_of(sol.heywood.begin(), sol.heywood.end(), [](bool b) { return b; })) {
        sol.notices.push_back("Heywood case: communality above 1 clamped to 1");
      }
      return sol;
    }
  }
  throw PafIterationLimit("principal-axis factoring did not converge within " +
                              std::to_string(options.max_iterations) + " iterations",
                          sol);
}

// ---------------------------------------------------------------------------
// Number of factors

std::size_t extract_k1(const Eigen::VectorXd& eigenvalues) {
  return static_cast<std::size_t>((eigenvalues.array() > 1.0).count());
}

std::vector<ScreeRow> scree_data(const Eigen::VectorXd& eigenvalues) {
  std::vector<ScreeRow> rows;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    rows.push_back({static_cast<std::size_t>(i + 1), eigenvalues(i), std::nullopt, std::nullopt});
  }
  return rows;
}

std::vector<VssRow> vss(const CorrelationMatrix& c, std::size_t max_k, const PafOptions& options) {
  if (max_k < 1 || max_k > c.size() / 2) {
    throw UsageError("VSS: max_k must lie in [1, items / 2]");
  }
  const auto k = c.values.rows();
  double observed_ms = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) observed_ms += c.values(i, j) * c.values(i, j);
    }
  }

  std::vector<VssRow> out;
  for (std::size_t nf = 1; nf <= max_k; ++nf) {
    FactorSolution sol;
    try {
      sol = paf(c, nf, options);
    } catch (const PafIterationLimit& e) {
      // Over-extracted models often oscillate; their fit is still informative.
      sol = e.last_iterate();
    }
    if (nf >= 2) sol = rotate_varimax(sol);
    Eigen::MatrixXd simple = Eigen::MatrixXd::Zero(k, sol.loadings.cols());
    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::Index arg = 0;
      sol.loadings.row(i).cwiseAbs().maxCoeff(&arg);
      simple(i, arg) = sol.loadings(i, arg);
    }
    const Eigen::MatrixXd residual = c.values - simple * simple.transpose();
    double residual_ms = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        if (i != j) residual_ms += residual(i, j) * residual(i, j);
      }
    }
    const double fit = observed_ms > 0.0 ? 1.0 - residual_ms / observed_ms : 0.0;
    out.push_back({nf, std::clamp(fit, 0.0, 1.0)});
  }
  return out;
}

namespace {

Eigen::VectorXd random_eigenvalues(std::size_t n, std::size_t k, std::uint64_t seed,
                                   std::uint64_t replicate) {
  auto rng = Rng::substream(seed, replicate);
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = rng.normal();
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::VectorXd norms = x.colwise().norm();
  for (Eigen::Index j = 0; j < cols; ++j) x.col(j) /= norms(j);
  Eigen::MatrixXd r = x.transpose() * x;
  r = (r + r.transpose()) / 2.0;
  r.diagonal().setOnes();
  return eigen_symmetric(r).values;
}

}  // namespace

ParallelResult parallel_analysis(const Eigen::VectorXd& observed, std::size_t n_participants,
                                 const ParallelOptions& options) {
  if (options.replicates < 100) throw UsageError("parallel analysis needs at least 100 replicates");
  if (n_participants < 3) throw InsufficientDataError("parallel analysis needs at least three participants");
  const auto k = static_cast<std::size_t>(observed.size());
  if (k < 2) throw UsageError("parallel analysis needs at least two items");

  std::vector<Eigen::VectorXd> draws(options.replicates);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.replicates));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      draws[r] = random_eigenvalues(n_participants, k, options.seed, r);
    }
  };
  if (threads <= 1) {
    work(0, options.replicates);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (options.replicates + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(options.replicates, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  ParallelResult out;
  out.criterion = options.criterion;
  out.observed = observed;
  out.random_mean.resize(observed.size());
  out.random_p95.resize(observed.size());
  std::vector<double> column(options.replicates);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t r = 0; r < options.replicates; ++r) column[r] = draws[r](static_cast<Eigen::Index>(j));
    out.random_mean(static_cast<Eigen::Index>(j)) = mean(column);
    out.random_p95(static_cast<Eigen::Index>(j)) = quantile(column, 0.95);
  }
  const Eigen::VectorXd& bar =
      options.criterion == ParallelCriterion::mean ? out.random_mean : out.random_p95;
  while (out.retained < k &&
         observed(static_cast<Eigen::Index>(out.retained)) > bar(static_cast<Eigen::Index>(out.retained))) {
    ++out.retained;
  }
  return out;
}

ParallelResult parallel_analysis(const ScoredTest& scored, const ParallelOptions& options,
                                 CorrelationMethod method) {
  const auto c = correlation_matrix(scored, method);
  return parallel_analysis(eigen_symmetric(c.values).values, scored.n_participants(), options);
}

ExtractionAdvice advise_extraction(const ScoredTest& scored, const CorrelationMatrix& c,
                                   const ExtractionOptions& options) {
  ExtractionAdvice advice;
  const Eigen::VectorXd eig = eigen_symmetric(c.values).values;
  advice.k1_count = extract_k1(eig);

  const auto pa = parallel_analysis(eig, scored.n_participants(), options.parallel);
  advice.parallel_count = pa.retained;
  advice.scree = scree_data(eig);
  for (std::size_t i = 0; i < advice.scree.size(); ++i) {
    advice.scree[i].random_mean = pa.random_mean(static_cast<Eigen::Index>(i));
    advice.scree[i].random_p95 = pa.random_p95(static_cast<Eigen::Index>(i));
  }

  const std::size_t max_k = options.vss_max_k.value_or(std::min<std::size_t>(8, c.size() / 2));
  if (max_k >= 1) advice.vss_table = vss(c, std::min(max_k, c.size() / 2), options.paf);

  if (options.n_factors) {
    advice.chosen_count = *options.n_factors;
    advice.chosen_by = "config";
  } else if (options.choose == "k1") {
    advice.chosen_count = advice.k1_count;
    advice.chosen_by = "k1";
  } else if (options.choose == "vss") {
    auto best = std::max_element(advice.vss_table.begin(), advice.vss_table.end(),
                                 [](const auto& a, const auto& b) { return a.criterion < b.criterion; });
    advice.chosen_count = best == advice.vss_table.end() ? 0 : best->k;
    advice.chosen_by = "vss";
  } else if (options.choose == "parallel") {
    advice.chosen_count = advice.parallel_count;
    advice.chosen_by = "parallel";
  } else {
    throw UsageError("unknown factor-count rule '" + options.choose + "' (expected parallel|k1|vss)");
  }
  return advice;
}

void write_scree_csv(std::ostream& out, const std::vector<ScreeRow>& scree) {
  out << "index,eigenvalue,random_mean,random_p95\n";
  out << std::setprecision(17);
  for (const auto& row : scree) {
    out << row.index << ',' << row.eigenvalue << ',';
    if (row.random_mean) out << *row.random_mean;
    out << ',';
    if (row.random_p95) out << *row.random_p95;
    out << '\n';
  }
}

std::string render_scree_svg(const std::vector<ScreeRow>& scree) {
  constexpr double width = 480, height = 320, margin = 40;
  double top = 1.0;
  for (const auto& r : scree) {
    top = std::max({top, r.eigenvalue, r.random_p95.value_or(0.0)});
  }
  top = std::ceil(top);
  const double step = scree.size() > 1 ? (width - 2 * margin) / static_cast<double>(scree.size() - 1) : 0.0;
  auto x = [&](std::size_t i) { return margin + step * static_cast<double>(i); };
  auto y = [&](double v) { return height - margin - (height - 2 * margin) * std::max(0.0, v) / top; };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
     << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
     << height - margin << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << margin << "\" y1=\"" << y(1.0) << "\" x2=\"" << width - margin << "\" y2=\""
     << y(1.0) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  auto polyline = [&](auto value, const char* colour, const char* dash) {
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\"" << dash << " points=\"";
    for (std::size_t i = 0; i < scree.size(); ++i) {
      if (auto v = value(scree[i])) os << x(i) << ',' << y(*v) << ' ';
    }
    os << "\"/>\n";
  };
  polyline([](const ScreeRow& r) { return std::optional<double>(r.eigenvalue); }, "black", "");
  if (!scree.empty() && scree.front().random_mean) {
    polyline([](const ScreeRow& r) { return r.random_mean; }, "steelblue", " stroke-dasharray=\"6 3\"");
  }
  for (std::size_t i = 0; i < scree.size(); ++i) {
    os << "<circle cx=\"" << x(i) << "\" cy=\"" << y(scree[i].eigenvalue) << "\" r=\"3\"/>\n";
    os << "<text x=\"" << x(i) << "\" y=\"" << height - margin + 16
       << "\" font-size=\"10\" text-anchor=\"middle\">" << scree[i].index << "</text>\n";
  }
  os << "<text x=\"" << margin - 6 << "\" y=\"" << y(top) + 4 << "\" font-size=\"10\" text-anchor=\"end\">"
     << top << "</text>\n";
  os << "<text x=\"" << margin - 6 << "\" y=\"" << y(0.0) + 4
     << "\" font-size=\"10\" text-anchor=\"end\">0</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Rotation

double varimax_criterion(const Eigen::MatrixXd& loadings) {
  const double p = static_cast<double>(loadings.rows());
  const Eigen::ArrayXXd sq = loadings.array().square();
  double v = 0.0;
  for (Eigen::Index j = 0; j < sq.cols(); ++j) {
    const double s2 = sq.col(j).sum();
    v += (p * sq.col(j).square().sum() - s2 * s2) / (p * p);
  }
  return v;
}

FactorSolution rotate_varimax(const FactorSolution& sol, const VarimaxOptions& options,
                              std::vector<double>* criterion_trace) {
  FactorSolution out = sol;
  const auto f = sol.loadings.cols();
  if (f < 2) {
    out.notices.push_back("single factor: rotation not applicable");
    return out;
  }
  const auto p = sol.loadings.rows();
  Eigen::VectorXd row_norm = sol.loadings.rowwise().norm();
  Eigen::MatrixXd l = sol.loadings;
  if (options.kaiser_normalize) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (row_norm(i) > 0.0) l.row(i) /= row_norm(i);
    }
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(f, f);
  const double n = static_cast<double>(p);

  double criterion = varimax_criterion(l);
  if (criterion_trace) criterion_trace->push_back(criterion);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (Eigen::Index a = 0; a < f - 1; ++a) {
      for (Eigen::Index b = a + 1; b < f; ++b) {
        double sa = 0.0, sb = 0.0, sc = 0.0, sd = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
          const double x = l(i, a), y = l(i, b);
          const double u = x * x - y * y;
          const double v = 2.0 * x * y;
          sa += u;
          sb += v;
          sc += u * u - v * v;
          sd += 2.0 * u * v;
        }
        const double num = sd - 2.0 * sa * sb / n;
        const double den = sc - (sa * sa - sb * sb) / n;
        const double phi = 0.25 * std::atan2(num, den);
        if (phi == 0.0) continue;
        const double c = std::cos(phi), s = std::sin(phi);
        for (Eigen::Index i = 0; i < p; ++i) {
          const double x = l(i, a), y = l(i, b);
          l(i, a) = c * x + s * y;
          l(i, b) = -s * x + c * y;
        }
        for (Eigen::Index i = 0; i < f; ++i) {
          const double x = t(i, a), y = t(i, b);
          t(i, a) = c * x + s * y;
          t(i, b) = -s * x + c * y;
        }
      }
    }
    const double next = varimax_criterion(l);
    if (criterion_trace) criterion_trace->push_back(next);
    const bool done = next - criterion < options.tolerance;
    criterion = next;
    if (done) break;
  }

  out.loadings = sol.loadings * t;
  out.rotation_matrix = sol.rotation_matrix * t;
  out.factor_correlations = Eigen::MatrixXd::Identity(f, f);
  out.rotation = Rotation::varimax;
  canonicalize(out);
  return out;
}

FactorSolution rotate_promax(const FactorSolution& sol, int power) {
  if (power < 2) throw UsageError("promax power must be at least 2");
  if (sol.loadings.cols() < 2) {
    FactorSolution out = sol;
    out.notices.push_back("single factor: rotation not applicable");
    return out;
  }
  const FactorSolution vm = rotate_varimax(sol);
  const Eigen::MatrixXd& l = vm.loadings;
  const auto f = l.cols();

  Eigen::MatrixXd target = l;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    for (Eigen::Index j = 0; j < f; ++j) {
      target(i, j) = l(i, j) * std::pow(std::abs(l(i, j)), power - 1);
    }
  }
  // Least-squares transformation toward the target, columns rescaled so the
  // implied factor correlations have a unit diagonal.
  Eigen::MatrixXd u = l.colPivHouseholderQr().solve(target);
  const Eigen::MatrixXd utu_inv = (u.transpose() * u).inverse();
  for (Eigen::Index j = 0; j < f; ++j) u.col(j) *= std::sqrt(utu_inv(j, j));
  const Eigen::MatrixXd phi_raw = (u.transpose() * u).inverse();

  FactorSolution out = vm;
  out.loadings = l * u;
  out.rotation_matrix = vm.rotation_matrix * u;
  out.factor_correlations = (phi_raw + phi_raw.transpose()) / 2.0;
  out.factor_correlations.diagonal().setOnes();
  out.rotation = Rotation::promax;
  canonicalize(out);
  return out;
}

LoadingFlags crossloading_flags(const FactorSolution& sol, double threshold) {
  LoadingFlags flags;
  const auto p = sol.loadings.rows();
  const auto f = sol.loadings.cols();
  flags.items.resize(static_cast<std::size_t>(p));
  flags.salient_counts.assign(static_cast<std::size_t>(f), 0);
  for (Eigen::Index i = 0; i < p; ++i) {
    int salient = 0;
    for (Eigen::Index j = 0; j < f; ++j) {
      if (std::abs(sol.loadings(i, j)) >= threshold) {
        ++salient;
        ++flags.salient_counts[static_cast<std::size_t>(j)];
      }
    }
    if (salient >= 2) flags.items[static_cast<std::size_t>(i)].push_back(LoadingFlag::crossloading);
    if (salient == 0) flags.items[static_cast<std::size_t>(i)].push_back(LoadingFlag::orphan);
  }
  for (auto count : flags.salient_counts) flags.underidentified.push_back(count < 3);
  return flags;
}

double tucker_congruence(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
  if (!(denom > 0.0)) throw DegenerateInputError("congruence with an all-zero loading column");
  return a.dot(b) / denom;
}

}  // namespace psymeter
