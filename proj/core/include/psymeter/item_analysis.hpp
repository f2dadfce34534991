#pragma once

#include "psymeter/data.hpp"

#include <string>
#include <vector>

namespace psymeter {

enum class ItemFlag { low_variance, nonpositive_discrimination };

std::string_view to_string(ItemFlag f);

struct ItemStats {
  std::string item;
  /// Proportion correct (knowledge) or mean score (person).
  double facility = 0.0;
  double variance = 0.0;
  /// Item-rest correlation (item removed from the total).
  double discrimination = 0.0;
  /// Item-total correlation (item included).
  double discrimination_uncorrected = 0.0;
  std::vector<ItemFlag> flags;

  bool has(ItemFlag f) const;
};

struct ItemAnalysisOptions {
  double low_variance_knowledge = 0.05;
  double low_variance_person = 0.5;
  /// Which discrimination drives the nonpositive_discrimination flag.
  bool flag_on_corrected = true;
};

double item_facility(const ScoredTest& scored, std::string_view item);

/// Knowledge: facility * (1 - facility). Person: sample variance.
double item_variance(const ScoredTest& scored, std::string_view item);

/// Knowledge-item variance from a facility value.
double facility_variance(double facility);

/// Pearson correlation of the item with the total score; with `corrected` the
/// item's own score is first subtracted from the total.
double item_discrimination(const ScoredTest& scored, std::string_view item, bool corrected);

bool is_low_variance(double variance, TestType type, const ItemAnalysisOptions& options = {});

/// Flags are advisory; nothing is removed.
std::vector<ItemStats> item_report(const ScoredTest& scored,
                                   const ItemAnalysisOptions& options = {});

}  // namespace psymeter
