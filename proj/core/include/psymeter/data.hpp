#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace psymeter {

enum class TestType { knowledge, person };

std::string_view to_string(TestType t);
TestType parse_test_type(std::string_view s);

/// Item metadata for one instrument.
///
/// Knowledge tests carry an answer key (item ID -> correct response) and are
/// scored 0/1 against it. Person tests have no key; their items are Likert
/// responses in [min_score, max_score], some of which may be reverse-keyed.
struct ScaleSpec {
  int min_score = 0;
  int max_score = 1;
  std::set<std::string> reverse_keyed;
  TestType test_type = TestType::person;
  std::optional<std::map<std::string, double>> key;
  std::optional<std::string> group_column;

  /// Checks the invariants that do not depend on a data set.
  void validate() const;
};

using AuxColumns = std::map<std::string, std::vector<std::string>>;

/// Participants x items grid of raw responses. A cell is either a number or
/// explicitly missing. Non-item columns (group labels, criterion scores) ride
/// along as raw strings in `aux`.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> participants, std::vector<std::string> items,
                 std::vector<std::optional<double>> cells, AuxColumns aux = {});

  std::size_t n_participants() const noexcept { return participants_.size(); }
  std::size_t n_items() const noexcept { return items_.size(); }

  const std::vector<std::string>& participants() const noexcept { return participants_; }
  const std::vector<std::string>& items() const noexcept { return items_; }
  const AuxColumns& aux() const noexcept { return aux_; }

  const std::optional<double>& cell(std::size_t row, std::size_t col) const {
    return cells_[row * items_.size() + col];
  }
  bool missing(std::size_t row, std::size_t col) const { return !cell(row, col).has_value(); }
  std::size_t missing_count() const;
  bool row_complete(std::size_t row) const;

  std::optional<std::size_t> item_index(std::string_view item) const;

  friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;

 private:
  std::vector<std::string> participants_;
  std::vector<std::string> items_;
  std::vector<std::optional<double>> cells_;  // row-major
  AuxColumns aux_;
};

/// Item-level scores after keying and reversal, plus per-participant totals.
class ScoredTest {
 public:
  ScoredTest() = default;
  ScoredTest(std::vector<std::string> participants, std::vector<std::string> items,
             Eigen::MatrixXd scores, TestType type, double min_score, double max_score,
             AuxColumns aux = {});

  std::size_t n_participants() const noexcept { return participants_.size(); }
  std::size_t n_items() const noexcept { return items_.size(); }

  const std::vector<std::string>& participants() const noexcept { return participants_; }
  const std::vector<std::string>& items() const noexcept { return items_; }
  const Eigen::MatrixXd& scores() const noexcept { return scores_; }
  const Eigen::VectorXd& totals() const noexcept { return totals_; }
  const AuxColumns& aux() const noexcept { return aux_; }
  TestType test_type() const noexcept { return type_; }
  double min_score() const noexcept { return min_score_; }
  double max_score() const noexcept { return max_score_; }

  /// Throws UsageError for an unknown item ID.
  std::size_t item_index(std::string_view item) const;
  Eigen::VectorXd column(std::string_view item) const;

  /// Copy restricted to the given item columns, totals recomputed.
  ScoredTest select_items(const std::vector<std::size_t>& columns) const;

 private:
  std::vector<std::string> participants_;
  std::vector<std::string> items_;
  Eigen::MatrixXd scores_;
  Eigen::VectorXd totals_;
  TestType type_ = TestType::person;
  double min_score_ = 0.0;
  double max_score_ = 1.0;
  AuxColumns aux_;
};

inline constexpr std::string_view kParticipantColumn = "participant_id";

/// Parses CSV text. Columns named in `auxiliary` (and the scale's group
/// column) are kept as raw strings; every other non-ID column is an item.
ResponseMatrix read_csv(std::istream& in, const ScaleSpec& spec,
                        const std::set<std::string>& auxiliary = {});
ResponseMatrix load_csv(const std::filesystem::path& path, const ScaleSpec& spec,
                        const std::set<std::string>& auxiliary = {});

void write_csv(std::ostream& out, const ResponseMatrix& m);

struct DeletionResult {
  ResponseMatrix matrix;
  std::size_t dropped = 0;
};

/// Keeps the participants whose item cells are all present.
DeletionResult listwise_delete(const ResponseMatrix& m);

/// x -> min + max - x on every reverse-keyed item. Missing cells stay missing.
ResponseMatrix apply_reverse_keying(const ResponseMatrix& m, const ScaleSpec& spec);

ScoredTest score(const ResponseMatrix& m, const ScaleSpec& spec);

}  // namespace psymeter
