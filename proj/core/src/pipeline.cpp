#include "psymeter/pipeline.hpp"

#include "psymeter/error.hpp"
#include "psymeter/fairness.hpp"
#include "psymeter/item_analysis.hpp"
#include "psymeter/reliability.hpp"
#include "psymeter/simulator.hpp"
#include "psymeter/standardization.hpp"
#include "psymeter/validity.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace psymeter {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = to_vector(m.row(i).transpose());
  return out;
}

template <class E>
std::vector<std::string> names(const std::vector<E>& v) {
  std::vector<std::string> out;
  for (auto e : v) out.emplace_back(to_string(e));
  return out;
}

const std::vector<std::string>& aux_column(const ResponseMatrix& m, const std::string& name) {
  auto it = m.aux().find(name);
  if (it == m.aux().end()) throw DataError("input has no column '" + name + "'");
  return it->second;
}

std::optional<double> parse_number(const std::string& s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return x;
}

std::vector<double> numeric_column(const ResponseMatrix& m, const std::string& name) {
  const auto& raw = aux_column(m, name);
  std::vector<double> out;
  out.reserve(raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    auto x = parse_number(raw[r]);
    if (!x) {
      throw DataError("column '" + name + "', participant " + m.participants()[r] +
                      ": expected a number, got '" + raw[r] + "'");
    }
    out.push_back(*x);
  }
  return out;
}

std::vector<double> totals_of(const ScoredTest& s) { return to_vector(s.totals()); }

bool all_binary(const ScoredTest& s) {
  return (s.scores().array() == 0.0 || s.scores().array() == 1.0).all();
}

ItemSection item_section(const ScoredTest& scored, const Config& config) {
  ItemSection s;
  for (const auto& st : item_report(scored, config.items)) {
    ItemRow row{st.item, st.facility, st.variance, st.discrimination,
                st.discrimination_uncorrected, names(st.flags)};
    if (!st.flags.empty()) s.flagged_items.push_back(st.item);
    s.items.push_back(std::move(row));
  }
  return s;
}

EfaSection efa_section(const ScoredTest& scored, const Config& config,
                       std::vector<ScreeRow>& scree, std::vector<std::size_t>& indicators) {
  const auto& ec = config.efa;
  const auto c = correlation_matrix(scored, ec.correlation);
  const auto advice = advise_extraction(scored, c, ec.extraction);
  scree = advice.scree;

  EfaSection s;
  s.correlation = std::string(to_string(ec.correlation));
  s.k1_count = advice.k1_count;
  s.parallel_count = advice.parallel_count;
  s.parallel_criterion = std::string(to_string(ec.extraction.parallel.criterion));
  s.replicates = ec.extraction.parallel.replicates;
  s.seed = ec.extraction.parallel.seed;
  s.chosen_count = advice.chosen_count;
  s.chosen_by = advice.chosen_by;
  for (const auto& r : advice.scree) s.scree.push_back({r.index, r.eigenvalue, r.random_mean, r.random_p95});
  for (const auto& r : advice.vss_table) s.vss.push_back({r.k, r.criterion});

  if (advice.chosen_count == 0) {
    s.notices.push_back("no factor retained; no solution fitted");
    return s;
  }
  FactorSolution sol = ec.method == ExtractionMethod::paf
                           ? paf(c, advice.chosen_count, ec.extraction.paf)
                           : pca(c, advice.chosen_count);
  if (ec.rotation == Rotation::varimax) {
    sol = rotate_varimax(sol);
  } else if (ec.rotation == Rotation::promax) {
    sol = rotate_promax(sol, ec.promax_power);
  }
  const auto flags = crossloading_flags(sol, ec.salient_loading);
  indicators = flags.salient_counts;

  s.method = std::string(to_string(sol.method));
  s.rotation = std::string(to_string(sol.rotation));
  s.n_factors = sol.n_factors();
  s.iterations = sol.iterations;
  s.loadings = to_rows(sol.loadings);
  s.communalities = to_vector(sol.communalities);
  s.uniquenesses = to_vector(sol.uniquenesses);
  s.explained_variance = to_vector(sol.explained_variance());
  s.factor_correlations = to_rows(sol.factor_correlations);
  for (std::size_t i = 0; i < sol.items.size(); ++i) {
    if (sol.heywood[i]) s.heywood_items.push_back(sol.items[i]);
    s.loading_flags.push_back(names(flags.items[i]));
  }
  s.salient_counts = flags.salient_counts;
  s.notices = sol.notices;
  return s;
}

StandardizationSection standardization_section(const ScoredTest& scored, const Config& config) {
  const auto& sc = config.standardize;
  StandardizationSection s;
  const auto raw = totals_of(scored);
  std::optional<std::vector<double>> normalized;
  if (sc.transform) normalized = normalize(raw, *sc.transform);
  const auto& basis = normalized ? *normalized : raw;
  const NormReference norm = sc.norm ? *sc.norm : NormReference::from_sample(basis);
  s.norm_source = sc.norm ? "config" : "sample";
  s.norm_mean = norm.mean;
  s.norm_sd = norm.sd;
  s.transform = sc.transform ? (*sc.transform == NormalizeTransform::log ? "log" : "sqrt") : "none";
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double z = z_score(basis[i], norm);
    ScoreRow row;
    row.participant = scored.participants()[i];
    row.raw = raw[i];
    if (normalized) row.normalized = basis[i];
    row.z = z;
    row.t = t_score(z);
    row.stanine = stanine(z);
    row.sten = sten(z);
    s.scores.push_back(std::move(row));
  }
  return s;
}

CoefficientRow coefficient(const ReliabilityReport& r) {
  return {std::string(to_string(r.kind)), r.value, r.raw_value, r.n, r.half_correlation};
}

ReliabilitySection reliability_section(const ScoredTest& scored, const ResponseMatrix& data,
                                       const std::optional<ScoredTest>& second,
                                       const Config& config) {
  const auto& rc = config.reliability;
  ReliabilitySection s;
  std::optional<std::pair<std::string, double>> basis;

  if (scored.n_items() >= 2) {
    const auto alpha = cronbach_alpha(scored);
    s.coefficients.push_back(coefficient(alpha));
    s.alpha_if_deleted = alpha.alpha_if_deleted;
    basis = {"cronbach_alpha", alpha.value};
    s.coefficients.push_back(coefficient(split_half(scored)));
  } else {
    s.notices.push_back("internal consistency needs at least two items");
  }
  if (second) {
    const auto retest = test_retest(scored, *second, rc.retest_correlation);
    s.coefficients.push_back(coefficient(retest));
    if (!basis) basis = {"test_retest", retest.value};
  }

  if (!rc.rater_columns.empty()) {
    std::vector<std::vector<std::optional<double>>> units(data.n_participants());
    for (const auto& col : rc.rater_columns) {
      const auto& raw = aux_column(data, col);
      for (std::size_t r = 0; r < raw.size(); ++r) {
        if (raw[r].empty()) {
          units[r].emplace_back();
          continue;
        }
        auto x = parse_number(raw[r]);
        if (!x) {
          throw DataError("column '" + col + "', participant " + data.participants()[r] +
                          ": expected a rating, got '" + raw[r] + "'");
        }
        units[r].emplace_back(*x);
      }
    }
    const bool complete = std::all_of(units.begin(), units.end(), [](const auto& u) {
      return std::all_of(u.begin(), u.end(), [](const auto& v) { return v.has_value(); });
    });
    const bool categorical = complete && std::all_of(units.begin(), units.end(), [](const auto& u) {
      return std::all_of(u.begin(), u.end(), [](const auto& v) { return *v == std::floor(*v); });
    });
    const std::size_t n = data.n_participants();
    if (categorical && rc.rating_level == MeasurementLevel::nominal) {
      std::vector<std::vector<int>> ints(n);
      for (std::size_t r = 0; r < n; ++r) {
        for (const auto& v : units[r]) ints[r].push_back(static_cast<int>(*v));
      }
      if (rc.rater_columns.size() == 2) {
        std::vector<int> a, b;
        for (const auto& u : ints) {
          a.push_back(u[0]);
          b.push_back(u[1]);
        }
        const double k = cohen_kappa(a, b);
        s.coefficients.push_back({"cohen_kappa", k, k, n, std::nullopt});
      }
      if (rc.rater_columns.size() >= 2) {
        const double k = fleiss_kappa(ints);
        s.coefficients.push_back({"fleiss_kappa", k, k, n, std::nullopt});
      }
    } else if (rc.rating_level == MeasurementLevel::nominal) {
      s.notices.push_back("kappa coefficients need complete integer ratings; only Krippendorff's alpha reported");
    }
    const double a = krippendorff_alpha(units, rc.rating_level);
    s.coefficients.push_back({"krippendorff_alpha", a, a, n, std::nullopt});
  }

  if (basis && basis->second >= 0.0 && basis->second <= 1.0) {
    const auto e = sem(scored, basis->second, rc.sem_form);
    s.sem = SemEntry{std::string(to_string(e.form)), basis->first, basis->second, e.sem,
                     e.ci95_half_width};
  } else if (basis) {
    s.notices.push_back("standard error of measurement skipped: " + basis->first +
                        " lies outside [0, 1]");
  }
  return s;
}

ValidityRow validity_row(const ValidityReport& r, const std::string& measure) {
  return {std::string(to_string(r.kind)), measure, r.correlation, r.n, r.meets_threshold};
}

ValiditySection validity_section(const ScoredTest& scored, const ResponseMatrix& data,
                                 const Config& config) {
  const auto& vc = config.validity;
  const auto totals = totals_of(scored);
  ValiditySection s;
  if (vc.criterion_column) {
    s.results.push_back(validity_row(
        predictive_validity(totals, numeric_column(data, *vc.criterion_column), vc.correlation),
        *vc.criterion_column));
  }
  if (vc.concurrent_column) {
    s.results.push_back(validity_row(
        concurrent_validity(totals, numeric_column(data, *vc.concurrent_column), vc.correlation),
        *vc.concurrent_column));
  }
  if (vc.convergent_column) {
    const auto d = differential_validity(totals, numeric_column(data, *vc.convergent_column),
                                         numeric_column(data, *vc.discriminant_column),
                                         vc.correlation, vc.margin);
    s.results.push_back(validity_row(d.convergent, *vc.convergent_column));
    s.results.push_back(validity_row(d.discriminant, *vc.discriminant_column));
    s.differential = DifferentialEntry{d.discrepancy, vc.margin, d.concern};
  }
  return s;
}

DifRow dif_row(const DifResult& r, bool mh) {
  DifRow row{r.item, std::string(to_string(r.method)), r.statistic, r.p_value, r.effect,
             r.flagged, std::nullopt, std::nullopt};
  if (mh) {
    row.strata_used = r.strata_used;
    row.strata_dropped = r.strata_dropped;
  }
  return row;
}

FairnessSection fairness_section(const ScoredTest& scored, const ResponseMatrix& data,
                                 const Config& config) {
  const auto& dc = config.dif;
  const std::string column = *config.scale.group_column;
  const auto& labels = aux_column(data, column);

  FairnessSection s;
  s.group_column = column;
  const auto fac = facility_by_group(scored, labels);
  s.levels = fac.levels;
  for (std::size_t j = 0; j < fac.items.size(); ++j) {
    const auto row = fac.facility.row(static_cast<Eigen::Index>(j));
    s.facility.push_back({fac.items[j], to_vector(row.transpose()),
                          fac.max_difference(static_cast<Eigen::Index>(j))});
  }

  const auto groups = BinaryGroups::from_labels(labels, dc.reference);
  s.reference = groups.reference;
  s.focal = groups.focal;

  const ScoredTest tested = dc.dichotomize_threshold ? dichotomize(scored, *dc.dichotomize_threshold) : scored;
  s.dichotomize_threshold = dc.dichotomize_threshold;

  std::vector<std::string> items = dc.items.empty() ? scored.items() : dc.items;
  for (const auto& it : items) {
    if (std::find(scored.items().begin(), scored.items().end(), it) == scored.items().end()) {
      throw UsageError("config: [dif] items names unknown item '" + it + "'");
    }
  }

  std::vector<DifResult> results;
  MhOptions mh;
  mh.n_strata = dc.strata;
  mh.alpha = dc.alpha;
  for (const auto& it : items) {
    if (dc.mantel_haenszel) {
      try {
        results.push_back(mantel_haenszel_dif(tested, groups, it, mh));
        s.dif.push_back(dif_row(results.back(), true));
      } catch (const InsufficientDataError& e) {
        s.skipped.push_back(it + ": mh: " + e.what());
      }
    }
    if (dc.logistic) {
      try {
        const auto l = logistic_dif(tested, groups, it, dc.alpha);
        results.push_back(l.uniform);
        s.dif.push_back(dif_row(l.uniform, false));
        results.push_back(l.nonuniform);
        s.dif.push_back(dif_row(l.nonuniform, false));
      } catch (const NumericalError& e) {
        s.skipped.push_back(it + ": logistic: " + e.what());
      }
    }
  }
  const auto dtf = dtf_summary(results, dc.alpha, dc.dtf_threshold);
  for (const auto& m : dtf.methods) {
    s.dtf.push_back({std::string(to_string(m.method)), m.tested, m.flagged, m.proportion});
  }
  s.dtf_warning = dtf.warning;
  return s;
}

bool wants(const std::vector<Analysis>& v, Analysis a) {
  return std::find(v.begin(), v.end(), a) != v.end();
}

}  // namespace

PipelineResult run_pipeline(const Config& config, const PipelineInputs& inputs,
                            const std::vector<Analysis>& analyses, std::string command,
                            bool lenient) {
  PipelineResult out;
  auto& rep = out.report;
  rep.tool_version = std::string(tool_version());
  rep.command = std::move(command);
  rep.config = config.raw;

  const auto cleaned = listwise_delete(inputs.data);
  const ResponseMatrix& data = cleaned.matrix;
  const ScoredTest scored = score(data, config.scale);
  rep.dataset = DatasetSummary{scored.n_participants(), scored.n_items(), cleaned.dropped,
                               std::string(to_string(config.scale.test_type)), scored.items()};
  std::optional<ScoredTest> second;
  if (inputs.second) second = score(listwise_delete(*inputs.second).matrix, config.scale);

  auto skip = [&](const std::string& why) {
    if (!lenient) throw UsageError(why);
    rep.advisories.push_back("skipped: " + why);
  };

  std::vector<std::size_t> indicators;
  if (wants(analyses, Analysis::items)) rep.item_analysis = item_section(scored, config);
  if (wants(analyses, Analysis::efa)) rep.efa = efa_section(scored, config, out.scree, indicators);
  if (wants(analyses, Analysis::standardize)) {
    rep.standardization = standardization_section(scored, config);
  }
  if (wants(analyses, Analysis::reliability)) {
    rep.reliability = reliability_section(scored, data, second, config);
  }
  if (wants(analyses, Analysis::validity)) {
    const auto& vc = config.validity;
    if (!vc.criterion_column && !vc.concurrent_column && !vc.convergent_column) {
      skip("validity needs [validity] criterion_column, concurrent_column or convergent_column");
    } else {
      rep.validity = validity_section(scored, data, config);
    }
  }
  if (wants(analyses, Analysis::dif)) {
    if (!config.scale.group_column) {
      skip("DIF needs [scale] group_column");
    } else if (!config.dif.dichotomize_threshold && !all_binary(scored)) {
      skip("DIF on non-dichotomous items needs [dif] dichotomize_threshold");
    } else {
      rep.fairness = fairness_section(scored, data, config);
    }
  }

  SampleContext ctx;
  ctx.items = scored.n_items();
  ctx.efa = wants(analyses, Analysis::efa);
  ctx.indicators_per_factor = indicators;
  auto advisories = warn_small_sample(scored.n_participants(), ctx);
  rep.advisories.insert(rep.advisories.begin(), advisories.begin(), advisories.end());
  return out;
}

SimulationResult simulate(const SimulateConfig& config) {
  SimulationResult out;
  nlohmann::json p;
  p["model"] = to_string(config.model);
  p["seed"] = config.seed;
  p["n"] = config.n;
  if (config.model == SimulationModel::retest) {
    TrueScoreSpec spec;
    spec.n = config.n;
    spec.true_variance = config.true_variance;
    spec.error_variance = config.error_variance;
    spec.seed = config.seed;
    auto [first, second] = generate_retest_pair(spec);
    auto as_responses = [](const ScoredTest& s) {
      std::vector<std::optional<double>> cells;
      for (Eigen::Index i = 0; i < s.scores().rows(); ++i) cells.emplace_back(s.scores()(i, 0));
      return ResponseMatrix(s.participants(), s.items(), std::move(cells));
    };
    out.data = as_responses(first);
    out.retest = as_responses(second);
    p["true_variance"] = spec.true_variance;
    p["error_variance"] = spec.error_variance;
    p["reliability"] = spec.reliability();
  } else {
    const auto spec = config.factor_model();
    p["loadings"] = to_rows(spec.loadings);
    p["factor_correlations"] = to_rows(spec.factor_correlations);
    if (spec.likert) {
      p["likert_min"] = spec.likert->min;
      p["likert_max"] = spec.likert->max;
    }
    if (config.model == SimulationModel::dif) {
      auto d = generate_dif_data(spec, config.dif_items, config.dif_kind, config.dif_magnitude,
                                 config.group_split);
      out.data = std::move(d.responses);
      p["group_column"] = kSimulatedGroupColumn;
      p["dif_items"] = config.dif_items;
      p["dif_kind"] = to_string(config.dif_kind);
      p["dif_magnitude"] = config.dif_magnitude;
      p["group_split"] = config.group_split;
      p["degenerate"] = d.degenerate;
    } else {
      out.data = generate_factor_data(spec);
    }
  }
  out.parameters_json = p.dump(2) + "\n";
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw DataError("failed writing '" + path.string() + "'");
}

void write_csv_file(const std::filesystem::path& path, const ResponseMatrix& m) {
  std::ostringstream s;
  write_csv(s, m);
  write_file(path, s.str());
}

std::vector<Analysis> analyses_for(const std::string& command) {
  if (command == "item-analysis") return {Analysis::items};
  if (command == "efa") return {Analysis::efa};
  if (command == "standardize") return {Analysis::standardize};
  if (command == "reliability") return {Analysis::reliability};
  if (command == "validity") return {Analysis::validity};
  if (command == "dif") return {Analysis::dif};
  return {Analysis::items,       Analysis::efa,      Analysis::standardize,
          Analysis::reliability, Analysis::validity, Analysis::dif};
}

int execute(const RunRequest& req, std::ostream& out) {
  if (std::find(std::begin(kSubcommands), std::end(kSubcommands), req.command) == std::end(kSubcommands)) {
    throw UsageError("unknown subcommand '" + req.command + "'");
  }
  RawConfig raw = req.config ? load_config(*req.config) : RawConfig{};
  if (req.use_environment) apply_env_overrides(raw, prefixed_environment());
  if (req.seed) {
    raw["efa"]["seed"] = std::to_string(*req.seed);
    raw["simulate"]["seed"] = std::to_string(*req.seed);
  }
  const Config config = Config::from_raw(raw);
  std::filesystem::create_directories(req.out_dir);

  EvaluationReport report;
  std::vector<ScreeRow> scree;
  if (req.command == "simulate") {
    const auto sim = simulate(config.simulate);
    SimulationSummary summary{std::string(to_string(config.simulate.model)), config.simulate.seed,
                              config.simulate.n, {"simulated.csv", "simulated.json"}};
    write_csv_file(req.out_dir / "simulated.csv", sim.data);
    if (sim.retest) {
      write_csv_file(req.out_dir / "simulated_retest.csv", *sim.retest);
      summary.files.insert(summary.files.begin() + 1, "simulated_retest.csv");
    }
    write_file(req.out_dir / "simulated.json", sim.parameters_json);
    report.tool_version = std::string(tool_version());
    report.command = req.command;
    report.config = config.raw;
    report.simulation = summary;
  } else {
    if (!req.input) throw UsageError(req.command + " needs --input");
    const auto aux = config.auxiliary_columns();
    PipelineInputs inputs{load_csv(*req.input, config.scale, aux), std::nullopt};
    if (req.input2) inputs.second = load_csv(*req.input2, config.scale, aux);
    auto result = run_pipeline(config, inputs, analyses_for(req.command), req.command,
                               req.command == "report");
    report = std::move(result.report);
    scree = std::move(result.scree);
  }

  const std::string json = to_json(report);
  const std::string text = to_text(report);
  if (req.command != "simulate") {
    write_file(req.out_dir / "report.json", json);
    write_file(req.out_dir / "report.txt", text);
  }
  if (!scree.empty()) {
    std::ostringstream csv;
    write_scree_csv(csv, scree);
    write_file(req.out_dir / "scree.csv", csv.str());
    write_file(req.out_dir / "scree.svg", render_scree_svg(scree));
  }
  out << (req.format == OutputFormat::json ? json : text);
  return 0;
}

}  // namespace

int run(const RunRequest& request, std::ostream& out, std::ostream& err) {
  try {
    return execute(request, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace psymeter
