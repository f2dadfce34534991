#include "psymeter/data.hpp"

#include "psymeter/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace psymeter {

std::string_view to_string(TestType t) {
  return t == TestType::knowledge ? "knowledge" : "person";
}

TestType parse_test_type(std::string_view s) {
  if (s == "knowledge") return TestType::knowledge;
  if (s == "person") return TestType::person;
  throw UsageError("unknown test_type '" + std::string(s) + "' (expected knowledge|person)");
}

void ScaleSpec::validate() const {
  if (min_score >= max_score) {
    throw UsageError("scale: min_score must be below max_score");
  }
  if (test_type == TestType::knowledge && !key) {
    throw UsageError("scale: knowledge tests require an answer key");
  }
  if (test_type == TestType::person && key) {
    throw UsageError("scale: person tests must not carry an answer key");
  }
  if (test_type == TestType::knowledge && !reverse_keyed.empty()) {
    throw UsageError("scale: reverse keying applies to person tests only");
  }
}

// ---------------------------------------------------------------------------
// ResponseMatrix

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw DataError(std::string("duplicate ") + what + " ID '" + id + "'");
    }
  }
}

}  // namespace

ResponseMatrix::ResponseMatrix(std::vector<std::string> participants,
                               std::vector<std::string> items,
                               std::vector<std::optional<double>> cells, AuxColumns aux)
    : participants_(std::move(participants)),
      items_(std::move(items)),
      cells_(std::move(cells)),
      aux_(std::move(aux)) {
  if (cells_.size() != participants_.size() * items_.size()) {
    throw DataError("response matrix is not rectangular");
  }
  require_unique(participants_, "participant");
  require_unique(items_, "item");
  for (const auto& [name, col] : aux_) {
    if (col.size() != participants_.size()) {
      throw DataError("auxiliary column '" + name + "' has wrong length");
    }
  }
}

std::size_t ResponseMatrix::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return !c; }));
}

bool ResponseMatrix::row_complete(std::size_t row) const {
  for (std::size_t j = 0; j < items_.size(); ++j) {
    if (missing(row, j)) return false;
  }
  return true;
}

std::optional<std::size_t> ResponseMatrix::item_index(std::string_view item) const {
  auto it = std::find(items_.begin(), items_.end(), item);
  if (it == items_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - items_.begin());
}

// ---------------------------------------------------------------------------
// ScoredTest

ScoredTest::ScoredTest(std::vector<std::string> participants, std::vector<std::string> items,
                       Eigen::MatrixXd scores, TestType type, double min_score,
                       double max_score, AuxColumns aux)
    : participants_(std::move(participants)),
      items_(std::move(items)),
      scores_(std::move(scores)),
      type_(type),
      min_score_(min_score),
      max_score_(max_score),
      aux_(std::move(aux)) {
  if (static_cast<std::size_t>(scores_.rows()) != participants_.size() ||
      static_cast<std::size_t>(scores_.cols()) != items_.size()) {
    throw DataError("scored test dimensions do not match its labels");
  }
  require_unique(participants_, "participant");
  require_unique(items_, "item");
  totals_ = scores_.rowwise().sum();
}

std::size_t ScoredTest::item_index(std::string_view item) const {
  auto it = std::find(items_.begin(), items_.end(), item);
  if (it == items_.end()) throw UsageError("unknown item '" + std::string(item) + "'");
  return static_cast<std::size_t>(it - items_.begin());
}

Eigen::VectorXd ScoredTest::column(std::string_view item) const {
  return scores_.col(static_cast<Eigen::Index>(item_index(item)));
}

ScoredTest ScoredTest::select_items(const std::vector<std::size_t>& columns) const {
  Eigen::MatrixXd sub(scores_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    sub.col(static_cast<Eigen::Index>(j)) = scores_.col(static_cast<Eigen::Index>(columns[j]));
    names.push_back(items_.at(columns[j]));
  }
  return ScoredTest(participants_, std::move(names), std::move(sub), type_, min_score_,
                    max_score_, aux_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 records: quoted fields may contain commas, doubled quotes, newlines.
std::vector<CsvRecord> split_records(std::istream& in) {
  std::vector<CsvRecord> records;
  CsvRecord rec;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  rec.line = 1;
  char ch;
  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) records.push_back(std::move(rec));
    rec = CsvRecord{};
    rec.line = line;
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError("stray quote inside unquoted field on line " + std::to_string(line),
                           line, std::to_string(rec.fields.size() + 1));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError("unterminated quoted field starting on line " + std::to_string(rec.line),
                     rec.line, std::to_string(rec.fields.size() + 1));
  }
  if (field_started || !field.empty() || !rec.fields.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

ResponseMatrix read_csv(std::istream& in, const ScaleSpec& spec,
                        const std::set<std::string>& auxiliary) {
  auto records = split_records(in);
  if (records.empty()) throw ParseError("CSV has no header row", 1, "");

  const auto& header = records.front().fields;
  std::set<std::string> aux_names = auxiliary;
  if (spec.group_column) aux_names.insert(*spec.group_column);

  std::optional<std::size_t> id_col;
  std::vector<std::size_t> item_cols;
  std::vector<std::string> items;
  std::map<std::string, std::size_t> aux_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string name(trim(header[c]));
    if (name.empty()) throw ParseError("empty column name in header", 1, std::to_string(c + 1));
    if (name == kParticipantColumn) {
      id_col = c;
    } else if (aux_names.count(name)) {
      aux_cols[name] = c;
    } else {
      item_cols.push_back(c);
      items.push_back(name);
    }
  }
  for (const auto& name : aux_names) {
    if (!aux_cols.count(name)) throw DataError("CSV lacks required column '" + name + "'");
  }
  {
    std::set<std::string> seen;
    for (const auto& it : items) {
      if (!seen.insert(it).second) throw DataError("duplicate item ID '" + it + "'");
    }
  }

  std::vector<std::string> participants;
  std::vector<std::optional<double>> cells;
  AuxColumns aux;
  for (const auto& [name, _] : aux_cols) aux[name];

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(rec.line) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(rec.fields.size()),
                       rec.line, "");
    }
    participants.push_back(id_col ? std::string(trim(rec.fields[*id_col]))
                                  : std::to_string(r));
    for (std::size_t j = 0; j < item_cols.size(); ++j) {
      auto text = trim(rec.fields[item_cols[j]]);
      if (text.empty()) {
        cells.emplace_back(std::nullopt);
        continue;
      }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("non-numeric cell '" + std::string(text) + "' at row " +
                             std::to_string(rec.line) + ", column \"" + items[j] + "\"",
                         rec.line, items[j]);
      }
      cells.emplace_back(value);
    }
    for (const auto& [name, c] : aux_cols) aux[name].emplace_back(trim(rec.fields[c]));
  }
  return ResponseMatrix(std::move(participants), std::move(items), std::move(cells),
                        std::move(aux));
}

ResponseMatrix load_csv(const std::filesystem::path& path, const ScaleSpec& spec,
                        const std::set<std::string>& auxiliary) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, spec, auxiliary);
}

void write_csv(std::ostream& out, const ResponseMatrix& m) {
  out << kParticipantColumn;
  for (const auto& it : m.items()) out << ',' << it;
  for (const auto& [name, _] : m.aux()) out << ',' << name;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < m.n_participants(); ++r) {
    out << m.participants()[r];
    for (std::size_t j = 0; j < m.n_items(); ++j) {
      out << ',';
      if (const auto& c = m.cell(r, j)) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *c);
        out.write(buf, ptr - buf);
      }
    }
    for (const auto& [_, col] : m.aux()) out << ',' << col[r];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cleaning and scoring

DeletionResult listwise_delete(const ResponseMatrix& m) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < m.n_participants(); ++r) {
    if (m.row_complete(r)) keep.push_back(r);
  }
  if (keep.empty()) {
    throw EmptyDatasetError("listwise deletion removed every participant");
  }
  std::vector<std::string> participants;
  std::vector<std::optional<double>> cells;
  AuxColumns aux;
  for (const auto& [name, _] : m.aux()) aux[name];
  for (auto r : keep) {
    participants.push_back(m.participants()[r]);
    for (std::size_t j = 0; j < m.n_items(); ++j) cells.push_back(m.cell(r, j));
    for (const auto& [name, col] : m.aux()) aux[name].push_back(col[r]);
  }
  return {ResponseMatrix(std::move(participants), m.items(), std::move(cells), std::move(aux)),
          m.n_participants() - keep.size()};
}

ResponseMatrix apply_reverse_keying(const ResponseMatrix& m, const ScaleSpec& spec) {
  std::vector<bool> reversed(m.n_items(), false);
  for (const auto& item : spec.reverse_keyed) {
    auto idx = m.item_index(item);
    if (!idx) throw UsageError("reverse-keyed item '" + item + "' is not in the data");
    reversed[*idx] = true;
  }
  std::vector<std::optional<double>> cells;
  cells.reserve(m.n_participants() * m.n_items());
  const double reflect = static_cast<double>(spec.min_score) + spec.max_score;
  for (std::size_t r = 0; r < m.n_participants(); ++r) {
    for (std::size_t j = 0; j < m.n_items(); ++j) {
      auto c = m.cell(r, j);
      if (c && reversed[j]) c = reflect - *c;
      cells.push_back(c);
    }
  }
  return ResponseMatrix(m.participants(), m.items(), std::move(cells), m.aux());
}

ScoredTest score(const ResponseMatrix& m, const ScaleSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(m.n_participants());
  const auto k = static_cast<Eigen::Index>(m.n_items());
  if (n == 0) throw EmptyDatasetError("no participants to score");

  for (std::size_t r = 0; r < m.n_participants(); ++r) {
    for (std::size_t j = 0; j < m.n_items(); ++j) {
      const auto& c = m.cell(r, j);
      if (!c) {
        throw DataError("missing cell at participant '" + m.participants()[r] + "', item '" +
                        m.items()[j] + "'; run listwise deletion first");
      }
      if (*c < spec.min_score || *c > spec.max_score) {
        throw RangeError("cell out of range [" + std::to_string(spec.min_score) + ", " +
                         std::to_string(spec.max_score) + "] at participant '" +
                         m.participants()[r] + "', item '" + m.items()[j] + "'");
      }
    }
  }

  Eigen::MatrixXd scores(n, k);
  if (spec.test_type == TestType::knowledge) {
    std::vector<double> answers;
    for (const auto& item : m.items()) {
      auto it = spec.key->find(item);
      if (it == spec.key->end()) throw UsageError("answer key lacks item '" + item + "'");
      answers.push_back(it->second);
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index j = 0; j < k; ++j) {
        scores(r, j) = *m.cell(static_cast<std::size_t>(r), static_cast<std::size_t>(j)) ==
                               answers[static_cast<std::size_t>(j)]
                           ? 1.0
                           : 0.0;
      }
    }
    return ScoredTest(m.participants(), m.items(), std::move(scores), TestType::knowledge, 0.0,
                      1.0, m.aux());
  }

  const auto keyed = apply_reverse_keying(m, spec);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < k; ++j) {
      scores(r, j) = *keyed.cell(static_cast<std::size_t>(r), static_cast<std::size_t>(j));
    }
  }
  return ScoredTest(m.participants(), m.items(), std::move(scores), TestType::person,
                    spec.min_score, spec.max_score, m.aux());
}

}  // namespace psymeter
