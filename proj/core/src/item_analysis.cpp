#include "psymeter/item_analysis.hpp"

#include "psymeter/error.hpp"
#include "psymeter/stats.hpp"

#include <algorithm>

namespace psymeter {

std::string_view to_string(ItemFlag f) {
  return f == ItemFlag::low_variance ? "low_variance" : "nonpositive_discrimination";
}

bool ItemStats::has(ItemFlag f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

double facility_variance(double facility) { return facility * (1.0 - facility); }

double item_facility(const ScoredTest& scored, std::string_view item) {
  if (scored.n_participants() == 0) throw EmptyDatasetError("item facility of an empty test");
  // Proportion correct for 0/1 columns is the column mean as well.
  return scored.column(item).mean();
}

double item_variance(const ScoredTest& scored, std::string_view item) {
  if (scored.test_type() == TestType::knowledge) {
    return facility_variance(item_facility(scored, item));
  }
  const Eigen::VectorXd col = scored.column(item);
  return sample_variance(as_span(col));
}

double item_discrimination(const ScoredTest& scored, std::string_view item, bool corrected) {
  const Eigen::VectorXd col = scored.column(item);
  Eigen::VectorXd total = scored.totals();
  if (corrected) total -= col;
  try {
    return pearson(as_span(col), as_span(total));
  } catch (const DegenerateInputError&) {
    throw DegenerateInputError("item '" + std::string(item) +
                               "': discrimination undefined (item or total is constant)");
  }
}

bool is_low_variance(double variance, TestType type, const ItemAnalysisOptions& options) {
  return variance < (type == TestType::knowledge ? options.low_variance_knowledge
                                                 : options.low_variance_person);
}

std::vector<ItemStats> item_report(const ScoredTest& scored, const ItemAnalysisOptions& options) {
  std::vector<ItemStats> out;
  out.reserve(scored.n_items());
  for (const auto& item : scored.items()) {
    ItemStats s;
    s.item = item;
    s.facility = item_facility(scored, item);
    s.variance = item_variance(scored, item);
    s.discrimination = item_discrimination(scored, item, true);
    s.discrimination_uncorrected = item_discrimination(scored, item, false);
    if (is_low_variance(s.variance, scored.test_type(), options)) {
      s.flags.push_back(ItemFlag::low_variance);
    }
    const double d = options.flag_on_corrected ? s.discrimination : s.discrimination_uncorrected;
    if (d <= 0.0) s.flags.push_back(ItemFlag::nonpositive_discrimination);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace psymeter
