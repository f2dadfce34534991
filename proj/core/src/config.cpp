#include "psymeter/config.hpp"

#include "psymeter/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

extern char** environ;

namespace psymeter {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const std::string* find(const std::string& section, const std::string& key) const {
    auto s = raw_.find(section);
    if (s == raw_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  [[noreturn]] static void bad(const std::string& section, const std::string& key,
                               const std::string& value, std::string_view expected) {
    throw UsageError("config: [" + section + "] " + key + " = '" + value + "': expected " +
                     std::string(expected));
  }

  void real(const std::string& section, const std::string& key, double& out) const {
    if (const auto* v = find(section, key)) out = parse_real(section, key, *v);
  }
  void real(const std::string& section, const std::string& key, std::optional<double>& out) const {
    if (const auto* v = find(section, key)) out = parse_real(section, key, *v);
  }

  template <class Int>
  void count(const std::string& section, const std::string& key, Int& out) const {
    if (const auto* v = find(section, key)) out = parse_count<Int>(section, key, *v);
  }
  void count(const std::string& section, const std::string& key,
             std::optional<std::size_t>& out) const {
    const auto* v = find(section, key);
    if (!v) return;
    if (lower(*v) == "auto") {
      out.reset();
    } else {
      out = parse_count<std::size_t>(section, key, *v);
    }
  }

  void flag(const std::string& section, const std::string& key, bool& out) const {
    const auto* v = find(section, key);
    if (!v) return;
    const auto s = lower(*v);
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
      out = true;
    } else if (s == "false" || s == "no" || s == "off" || s == "0") {
      out = false;
    } else {
      bad(section, key, *v, "true or false");
    }
  }

  void text(const std::string& section, const std::string& key,
            std::optional<std::string>& out) const {
    if (const auto* v = find(section, key); v && !v->empty()) out = *v;
  }

  void list(const std::string& section, const std::string& key,
            std::vector<std::string>& out) const {
    if (const auto* v = find(section, key)) out = split_list(*v);
  }

  /// Runs `parse` on the value, re-throwing its UsageError with the key named.
  template <class T, class Parse>
  void choice(const std::string& section, const std::string& key, T& out, Parse parse) const {
    const auto* v = find(section, key);
    if (!v) return;
    try {
      out = parse(*v);
    } catch (const UsageError& e) {
      throw UsageError("config: [" + section + "] " + key + ": " + e.what());
    }
  }

 private:
  static double parse_real(const std::string& section, const std::string& key,
                           const std::string& v) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x)) {
      bad(section, key, v, "a number");
    }
    return x;
  }

  template <class Int>
  static Int parse_count(const std::string& section, const std::string& key,
                         const std::string& v) {
    Int x{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      bad(section, key, v, "an integer");
    }
    return x;
  }

  const RawConfig& raw_;
};

CorrelationMethod correlation_choice(const std::string& s) { return parse_correlation_method(s); }

SimulationModel parse_model(std::string_view s) {
  if (s == "factor") return SimulationModel::factor;
  if (s == "retest") return SimulationModel::retest;
  if (s == "dif") return SimulationModel::dif;
  throw UsageError("unknown simulation model '" + std::string(s) + "' (expected factor|retest|dif)");
}

}  // namespace

std::string_view to_string(SimulationModel m) {
  switch (m) {
    case SimulationModel::factor: return "factor";
    case SimulationModel::retest: return "retest";
    case SimulationModel::dif: return "dif";
  }
  return "factor";
}

const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"scale", {"test_type", "min_score", "max_score", "reverse_keyed", "key", "group_column"}},
      {"items", {"low_variance_knowledge", "low_variance_person", "flag_on"}},
      {"efa",
       {"correlation", "method", "rotation", "promax_power", "salient_loading", "n_factors",
        "choose", "replicates", "criterion", "seed", "threads", "vss_max_k", "tolerance",
        "max_iterations", "allow_ridge"}},
      {"standardize", {"norm_mean", "norm_sd", "transform"}},
      {"reliability", {"sem_form", "retest_correlation", "rater_columns", "rating_level"}},
      {"validity",
       {"correlation", "criterion_column", "concurrent_column", "convergent_column",
        "discriminant_column", "margin"}},
      {"dif",
       {"reference", "strata", "alpha", "dtf_threshold", "dichotomize_threshold", "items",
        "methods"}},
      {"simulate",
       {"model", "n", "factors", "items_per_factor", "loading", "factor_correlation",
        "likert_min", "likert_max", "true_variance", "error_variance", "dif_items", "dif_kind",
        "dif_magnitude", "group_split", "seed"}},
  };
  return schema;
}

RawConfig parse_config(std::istream& in) {
  // The INI reader only knows whole-line ';' comments. Trailing comments
  // start at a '#' or ';' preceded by whitespace.
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && (line[first] == '#' || line[first] == ';')) line.clear();
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    cleaned << line << '\n';
  }
  std::istringstream text(cleaned.str());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(text, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  RawConfig raw;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw UsageError("config: key '" + section + "' appears outside any [section]");
    }
    auto& keys = raw[lower(trim(section))];
    for (const auto& [key, value] : body) keys[lower(trim(key))] = trim(value.data());
  }
  return raw;
}

RawConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

void apply_env_overrides(RawConfig& raw, const std::map<std::string, std::string>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind(kEnvPrefix, 0) != 0) continue;
    const std::string rest = name.substr(kEnvPrefix.size());
    const auto sep = rest.find("__");
    if (sep == std::string::npos || sep == 0 || sep + 2 == rest.size()) {
      throw UsageError("environment variable " + name +
                       " does not match PSYMETER_<SECTION>__<KEY>");
    }
    raw[lower(rest.substr(0, sep))][lower(rest.substr(sep + 2))] = trim(value);
  }
}

std::map<std::string, std::string> prefixed_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    const auto name = entry.substr(0, eq);
    if (name.rfind(kEnvPrefix, 0) == 0) out.emplace(name, entry.substr(eq + 1));
  }
  return out;
}

FactorModelSpec SimulateConfig::factor_model() const {
  FactorModelSpec spec;
  spec.loadings = simple_structure(factors, items_per_factor, loading);
  spec.factor_correlations = equicorrelation(factors, factor_correlation);
  spec.n = n;
  spec.likert = likert;
  spec.seed = seed;
  return spec;
}

Config Config::from_raw(const RawConfig& raw) {
  std::vector<std::string> unknown;
  const auto& schema = config_schema();
  for (const auto& [section, keys] : raw) {
    auto s = schema.find(section);
    if (s == schema.end()) {
      unknown.push_back("[" + section + "]");
      continue;
    }
    for (const auto& [key, _] : keys) {
      if (!s->second.count(key)) unknown.push_back(section + "." + key);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown key";
    msg += unknown.size() > 1 ? "s: " : ": ";
    for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
    throw UsageError(msg);
  }

  Config c;
  c.raw = raw;
  const Reader r(raw);

  auto& sc = c.scale;
  r.choice("scale", "test_type", sc.test_type, [](const std::string& v) { return parse_test_type(v); });
  r.count("scale", "min_score", sc.min_score);
  r.count("scale", "max_score", sc.max_score);
  std::vector<std::string> reversed;
  r.list("scale", "reverse_keyed", reversed);
  sc.reverse_keyed = {reversed.begin(), reversed.end()};
  if (const auto* v = r.find("scale", "key")) {
    std::map<std::string, double> key;
    for (const auto& pair : split_list(*v)) {
      const auto colon = pair.find(':');
      double x = 0.0;
      const std::string value = colon == std::string::npos ? "" : trim(pair.substr(colon + 1));
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
      if (colon == std::string::npos || ec != std::errc{} || p != value.data() + value.size()) {
        Reader::bad("scale", "key", *v, "item:answer pairs separated by commas");
      }
      key[trim(pair.substr(0, colon))] = x;
    }
    sc.key = std::move(key);
  }
  r.text("scale", "group_column", sc.group_column);
  try {
    sc.validate();
  } catch (const UsageError& e) {
    throw UsageError(std::string("config: [scale] ") + e.what());
  }

  r.real("items", "low_variance_knowledge", c.items.low_variance_knowledge);
  r.real("items", "low_variance_person", c.items.low_variance_person);
  r.choice("items", "flag_on", c.items.flag_on_corrected, [](const std::string& v) {
    if (v == "corrected") return true;
    if (v == "uncorrected") return false;
    throw UsageError("expected corrected|uncorrected");
  });

  auto& efa = c.efa;
  r.choice("efa", "correlation", efa.correlation, correlation_choice);
  r.choice("efa", "method", efa.method, [](const std::string& v) { return parse_extraction_method(v); });
  r.choice("efa", "rotation", efa.rotation, [](const std::string& v) { return parse_rotation(v); });
  r.count("efa", "promax_power", efa.promax_power);
  r.real("efa", "salient_loading", efa.salient_loading);
  r.count("efa", "n_factors", efa.extraction.n_factors);
  if (const auto* v = r.find("efa", "choose")) efa.extraction.choose = *v;
  r.count("efa", "replicates", efa.extraction.parallel.replicates);
  r.choice("efa", "criterion", efa.extraction.parallel.criterion,
           [](const std::string& v) { return parse_parallel_criterion(v); });
  r.count("efa", "seed", efa.extraction.parallel.seed);
  r.count("efa", "threads", efa.extraction.parallel.threads);
  r.count("efa", "vss_max_k", efa.extraction.vss_max_k);
  r.real("efa", "tolerance", efa.extraction.paf.tolerance);
  r.count("efa", "max_iterations", efa.extraction.paf.max_iterations);
  r.flag("efa", "allow_ridge", efa.extraction.paf.allow_ridge);
  if (efa.extraction.choose != "parallel" && efa.extraction.choose != "k1" &&
      efa.extraction.choose != "vss") {
    Reader::bad("efa", "choose", efa.extraction.choose, "parallel|k1|vss");
  }
  if (efa.promax_power < 2) {
    Reader::bad("efa", "promax_power", std::to_string(efa.promax_power), "an integer >= 2");
  }

  std::optional<double> norm_mean, norm_sd;
  r.real("standardize", "norm_mean", norm_mean);
  r.real("standardize", "norm_sd", norm_sd);
  if (norm_mean.has_value() != norm_sd.has_value()) {
    throw UsageError("config: [standardize] norm_mean and norm_sd must be given together");
  }
  if (norm_mean) {
    if (!(*norm_sd > 0.0)) Reader::bad("standardize", "norm_sd", *r.find("standardize", "norm_sd"), "a positive number");
    c.standardize.norm = NormReference{*norm_mean, *norm_sd};
  }
  r.choice("standardize", "transform", c.standardize.transform,
           [](const std::string& v) -> std::optional<NormalizeTransform> {
             if (v == "none") return std::nullopt;
             return parse_normalize_transform(v);
           });

  r.choice("reliability", "sem_form", c.reliability.sem_form,
           [](const std::string& v) { return parse_sem_form(v); });
  r.choice("reliability", "retest_correlation", c.reliability.retest_correlation, correlation_choice);
  r.list("reliability", "rater_columns", c.reliability.rater_columns);
  r.choice("reliability", "rating_level", c.reliability.rating_level, [](const std::string& v) {
    if (v == "nominal") return MeasurementLevel::nominal;
    if (v == "interval") return MeasurementLevel::interval;
    throw UsageError("expected nominal|interval");
  });

  r.choice("validity", "correlation", c.validity.correlation, correlation_choice);
  r.text("validity", "criterion_column", c.validity.criterion_column);
  r.text("validity", "concurrent_column", c.validity.concurrent_column);
  r.text("validity", "convergent_column", c.validity.convergent_column);
  r.text("validity", "discriminant_column", c.validity.discriminant_column);
  r.real("validity", "margin", c.validity.margin);
  if (c.validity.convergent_column.has_value() != c.validity.discriminant_column.has_value()) {
    throw UsageError("config: [validity] convergent_column and discriminant_column must be given together");
  }

  auto& dif = c.dif;
  r.text("dif", "reference", dif.reference);
  r.count("dif", "strata", dif.strata);
  r.real("dif", "alpha", dif.alpha);
  r.real("dif", "dtf_threshold", dif.dtf_threshold);
  r.real("dif", "dichotomize_threshold", dif.dichotomize_threshold);
  r.list("dif", "items", dif.items);
  if (const auto* v = r.find("dif", "methods")) {
    dif.mantel_haenszel = dif.logistic = false;
    for (const auto& m : split_list(*v)) {
      if (m == "mh") {
        dif.mantel_haenszel = true;
      } else if (m == "logistic") {
        dif.logistic = true;
      } else {
        Reader::bad("dif", "methods", *v, "a list drawn from mh, logistic");
      }
    }
    if (!dif.mantel_haenszel && !dif.logistic) Reader::bad("dif", "methods", *v, "at least one method");
  }
  if (dif.strata < 1) Reader::bad("dif", "strata", "0", "at least 1");
  if (!(dif.alpha > 0.0 && dif.alpha < 1.0)) Reader::bad("dif", "alpha", *r.find("dif", "alpha"), "a value in (0, 1)");

  auto& sim = c.simulate;
  r.choice("simulate", "model", sim.model, [](const std::string& v) { return parse_model(v); });
  r.count("simulate", "n", sim.n);
  r.count("simulate", "factors", sim.factors);
  r.count("simulate", "items_per_factor", sim.items_per_factor);
  r.real("simulate", "loading", sim.loading);
  r.real("simulate", "factor_correlation", sim.factor_correlation);
  const auto* lmin = r.find("simulate", "likert_min");
  const auto* lmax = r.find("simulate", "likert_max");
  if (lmin || lmax) {
    if (!lmin || !lmax) throw UsageError("config: [simulate] likert_min and likert_max must be given together");
    if (*lmin == "none" && *lmax == "none") {
      sim.likert.reset();
    } else {
      LikertBounds b;
      double lo = 0, hi = 0;
      r.real("simulate", "likert_min", lo);
      r.real("simulate", "likert_max", hi);
      if (lo != std::floor(lo) || hi != std::floor(hi)) {
        Reader::bad("simulate", "likert_min", *lmin, "integer bounds");
      }
      b.min = static_cast<int>(lo);
      b.max = static_cast<int>(hi);
      sim.likert = b;
    }
  }
  r.real("simulate", "true_variance", sim.true_variance);
  r.real("simulate", "error_variance", sim.error_variance);
  r.list("simulate", "dif_items", sim.dif_items);
  r.choice("simulate", "dif_kind", sim.dif_kind, [](const std::string& v) { return parse_dif_kind(v); });
  r.real("simulate", "dif_magnitude", sim.dif_magnitude);
  r.real("simulate", "group_split", sim.group_split);
  r.count("simulate", "seed", sim.seed);
  return c;
}

std::set<std::string> Config::auxiliary_columns() const {
  std::set<std::string> out;
  if (scale.group_column) out.insert(*scale.group_column);
  for (const auto* col : {&validity.criterion_column, &validity.concurrent_column,
                          &validity.convergent_column, &validity.discriminant_column}) {
    if (*col) out.insert(**col);
  }
  out.insert(reliability.rater_columns.begin(), reliability.rater_columns.end());
  return out;
}

}  // namespace psymeter
