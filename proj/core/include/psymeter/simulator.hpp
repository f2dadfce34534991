#pragma once

#include "psymeter/data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace psymeter {

struct LikertBounds {
  int min = 0;
  int max = 4;
};

/// Common-factor generating model: x = Lambda f + psi e with f ~ N(0, Phi)
/// and psi chosen so every item has unit variance.
struct FactorModelSpec {
  Eigen::MatrixXd loadings;             // items x factors
  Eigen::MatrixXd factor_correlations;  // factors x factors
  std::size_t n = 0;
  std::optional<LikertBounds> likert;
  std::uint64_t seed = 0;

  /// Throws UsageError on shape mismatch, a Phi that is not symmetric
  /// positive-definite with unit diagonal, or an implied communality above 1.
  void validate() const;
  Eigen::VectorXd communalities() const;
  /// Lambda Phi Lambda^T with a unit diagonal.
  Eigen::MatrixXd implied_correlations() const;
};

/// Observed = true + error for a single score, administered twice.
struct TrueScoreSpec {
  std::size_t n = 0;
  double true_variance = 1.0;
  double error_variance = 1.0;
  std::uint64_t seed = 0;

  double reliability() const { return true_variance / (true_variance + error_variance); }
  void validate() const;
};

/// `n_factors` blocks of `items_per_factor` items, each loading `loading`
/// on its own factor and 0 elsewhere.
Eigen::MatrixXd simple_structure(std::size_t n_factors, std::size_t items_per_factor,
                                 double loading);

/// Unit diagonal, every off-diagonal equal to r.
Eigen::MatrixXd equicorrelation(std::size_t size, double r);

std::vector<std::string> item_names(std::size_t count);
std::vector<std::string> participant_names(std::size_t count);

/// Continuous item scores (before any discretization), n x items.
Eigen::MatrixXd generate_factor_scores(const FactorModelSpec& spec);

ResponseMatrix generate_factor_data(const FactorModelSpec& spec);

/// Two single-item scored tests (item "score") sharing the true scores.
std::pair<ScoredTest, ScoredTest> generate_retest_pair(const TrueScoreSpec& spec);

enum class DifKind { uniform, nonuniform };

std::string_view to_string(DifKind k);
DifKind parse_dif_kind(std::string_view s);

struct DifDataset {
  /// Responses with an aux column "group" holding "reference" / "focal".
  ResponseMatrix responses;
  /// 0 = reference, 1 = focal, in participant order.
  std::vector<int> groups;
  /// Set when DIF items were requested with magnitude 0.
  bool degenerate = false;
};

inline constexpr std::string_view kSimulatedGroupColumn = "group";

/// The first round(n * group_split) participants form the reference group,
/// the rest the focal group; both share the latent distribution. In the focal
/// group a DIF item's continuous score is shifted by `magnitude` (uniform) or
/// its common part is scaled by 1 + magnitude (nonuniform) before
/// discretization. With magnitude 0 the output equals generate_factor_data.
DifDataset generate_dif_data(const FactorModelSpec& base, const std::vector<std::string>& dif_items,
                             DifKind kind, double magnitude, double group_split = 0.5);

}  // namespace psymeter
