#pragma once

#include "psymeter/data.hpp"
#include "psymeter/error.hpp"
#include "psymeter/stats.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace psymeter {

enum class ExtractionMethod { pca, paf };
enum class Rotation { none, varimax, promax };

std::string_view to_string(ExtractionMethod m);
std::string_view to_string(Rotation r);
ExtractionMethod parse_extraction_method(std::string_view s);
Rotation parse_rotation(std::string_view s);

/// Loadings and the variance decomposition of one factor model.
///
/// For rotated solutions the communalities are those of the extraction, which
/// orthogonal rotation preserves row by row. Items flagged in `heywood` had an
/// estimated communality above 1 that was clamped.
struct FactorSolution {
  std::vector<std::string> items;
  ExtractionMethod method = ExtractionMethod::pca;
  Rotation rotation = Rotation::none;
  Eigen::MatrixXd loadings;             // items x factors (pattern for promax)
  Eigen::VectorXd communalities;        // h^2
  Eigen::VectorXd uniquenesses;         // 1 - h^2
  Eigen::VectorXd eigenvalues;          // all, of the (reduced) matrix factored
  Eigen::MatrixXd factor_correlations;  // identity unless oblique
  /// loadings = unrotated loadings * rotation_matrix.
  Eigen::MatrixXd rotation_matrix;
  std::vector<bool> heywood;
  int iterations = 0;
  std::vector<std::string> notices;

  std::size_t n_items() const noexcept { return items.size(); }
  std::size_t n_factors() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
  /// Sum of squared loadings per factor.
  Eigen::VectorXd explained_variance() const;
  /// Lambda Phi Lambda^T.
  Eigen::MatrixXd model_matrix() const;
};

using PafIterationLimit = IterationLimitError<FactorSolution>;

FactorSolution pca(const CorrelationMatrix& c, std::size_t n_factors);

struct PafOptions {
  double tolerance = 1e-6;  // on max |delta h^2|
  int max_iterations = 100;
  /// Ridge the SMC start when the correlation matrix is singular.
  bool allow_ridge = true;
};

/// Iterated principal-axis factoring from squared-multiple-correlation start
/// values. Throws PafIterationLimit carrying the last iterate.
FactorSolution paf(const CorrelationMatrix& c, std::size_t n_factors, const PafOptions& options = {});

// ---------------------------------------------------------------------------
// Number of factors

/// Count of eigenvalues strictly above 1.
std::size_t extract_k1(const Eigen::VectorXd& eigenvalues);

struct ScreeRow {
  std::size_t index = 0;  // 1-based
  double eigenvalue = 0.0;
  std::optional<double> random_mean;
  std::optional<double> random_p95;
};

std::vector<ScreeRow> scree_data(const Eigen::VectorXd& eigenvalues);

struct VssRow {
  std::size_t k = 0;
  double criterion = 0.0;
};

/// Very Simple Structure fit for k = 1..max_k: each item keeps only its
/// largest-magnitude loading (after varimax when k >= 2), and the criterion is
/// 1 - MS(residual off-diagonals) / MS(observed off-diagonals), clamped to [0, 1].
std::vector<VssRow> vss(const CorrelationMatrix& c, std::size_t max_k,
                        const PafOptions& options = {});

enum class ParallelCriterion { mean, p95 };

std::string_view to_string(ParallelCriterion c);
ParallelCriterion parse_parallel_criterion(std::string_view s);

struct ParallelOptions {
  std::size_t replicates = 1000;
  ParallelCriterion criterion = ParallelCriterion::mean;
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency. Results do not depend on this.
  unsigned threads = 0;
};

struct ParallelResult {
  std::size_t retained = 0;
  Eigen::VectorXd observed;
  Eigen::VectorXd random_mean;
  Eigen::VectorXd random_p95;
  ParallelCriterion criterion = ParallelCriterion::mean;
};

/// Horn's parallel analysis against correlation matrices of independent
/// standard-normal data of the same shape. Replicate r draws from sub-stream r
/// of the seed, so the result is independent of thread count.
ParallelResult parallel_analysis(const Eigen::VectorXd& observed_eigenvalues,
                                 std::size_t n_participants, const ParallelOptions& options);
ParallelResult parallel_analysis(const ScoredTest& scored, const ParallelOptions& options,
                                 CorrelationMethod method = CorrelationMethod::pearson);

struct ExtractionAdvice {
  std::size_t k1_count = 0;
  std::vector<ScreeRow> scree;
  std::vector<VssRow> vss_table;
  std::size_t parallel_count = 0;
  std::size_t chosen_count = 0;
  /// "parallel", "k1", "vss" or "config".
  std::string chosen_by = "parallel";
};

struct ExtractionOptions {
  ParallelOptions parallel;
  std::optional<std::size_t> vss_max_k;  // default min(8, items / 2)
  std::string choose = "parallel";       // parallel | k1 | vss
  std::optional<std::size_t> n_factors;  // overrides `choose`
  PafOptions paf;
};

ExtractionAdvice advise_extraction(const ScoredTest& scored, const CorrelationMatrix& c,
                                   const ExtractionOptions& options = {});

void write_scree_csv(std::ostream& out, const std::vector<ScreeRow>& scree);
std::string render_scree_svg(const std::vector<ScreeRow>& scree);

// ---------------------------------------------------------------------------
// Rotation

struct VarimaxOptions {
  bool kaiser_normalize = true;
  double tolerance = 1e-10;  // on criterion gain per sweep
  int max_sweeps = 1000;
};

/// Varimax criterion of a loading matrix (rows normalized when requested).
double varimax_criterion(const Eigen::MatrixXd& loadings);

/// Orthogonal varimax rotation by pairwise planar rotations. Columns come out
/// ordered by explained variance with each column's largest-magnitude loading
/// positive. `criterion_trace`, when given, receives the criterion after each
/// sweep.
FactorSolution rotate_varimax(const FactorSolution& sol, const VarimaxOptions& options = {},
                              std::vector<double>* criterion_trace = nullptr);

/// Varimax followed by an oblique least-squares fit toward the target
/// sign(L) |L|^power. Requires power >= 2.
FactorSolution rotate_promax(const FactorSolution& sol, int power = 4);

enum class LoadingFlag { crossloading, orphan };

struct LoadingFlags {
  std::vector<std::vector<LoadingFlag>> items;  // per item
  std::vector<bool> underidentified;            // per factor: < 3 salient items
  std::vector<std::size_t> salient_counts;      // per factor
};

std::string_view to_string(LoadingFlag f);

inline constexpr double kSalientLoading = 0.32;

LoadingFlags crossloading_flags(const FactorSolution& sol, double threshold = kSalientLoading);

/// Tucker's congruence coefficient of two loading columns.
double tucker_congruence(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace psymeter
