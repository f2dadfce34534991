#include "fixtures.hpp"

#include <psymeter/config.hpp>
#include <psymeter/error.hpp>
#include <psymeter/pipeline.hpp>
#include <psymeter/report.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace psymeter;
namespace fs = std::filesystem;

namespace {

RawConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("psymeter_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name, std::ios::binary) << content;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kLikertConfig = "[scale]\nmin_score = 1\nmax_score = 5\n[efa]\nreplicates = 200\n";

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(RunRequest req) {
  req.use_environment = false;
  std::ostringstream out, err;
  const int code = run(req, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndLists) {
  auto raw = parse(
      "# comment\n[scale]\ntest_type = knowledge\nkey = q1:2, q2 : 1\n; other comment\n"
      "[efa]\nn_factors = 2\nrotation = varimax\n[dif]\nitems = q1, q2\n");
  auto c = Config::from_raw(raw);
  EXPECT_EQ(c.scale.test_type, TestType::knowledge);
  EXPECT_EQ(c.scale.key->at("q2"), 1.0);
  EXPECT_EQ(c.efa.extraction.n_factors, 2u);
  EXPECT_EQ(c.efa.rotation, Rotation::varimax);
  EXPECT_EQ(c.dif.items, (std::vector<std::string>{"q1", "q2"}));
  EXPECT_EQ(raw.at("efa").at("rotation"), "varimax");
}

TEST(Config, TrailingComments) {
  auto raw = parse("[efa]\nrotation = varimax   # none | varimax | promax\nseed = 3\t; fixed\n"
                   "[dif]\nreference = A#B\n");
  EXPECT_EQ(raw.at("efa").at("rotation"), "varimax");
  EXPECT_EQ(raw.at("efa").at("seed"), "3");
  EXPECT_EQ(raw.at("dif").at("reference"), "A#B");
  try {
    parse("# one\n; two\n[scale]\nmin_score = 1\nmin_score = 2\n");
    FAIL() << "duplicate key accepted";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(Config, Defaults) {
  auto c = Config::from_raw({});
  EXPECT_EQ(c.efa.method, ExtractionMethod::paf);
  EXPECT_EQ(c.efa.rotation, Rotation::promax);
  EXPECT_EQ(c.efa.extraction.choose, "parallel");
  EXPECT_EQ(c.efa.correlation, CorrelationMethod::pearson);
  EXPECT_EQ(c.dif.strata, 5u);
  EXPECT_EQ(c.dif.dtf_threshold, 0.25);
  EXPECT_EQ(c.reliability.sem_form, SemForm::conventional);
  EXPECT_FALSE(c.standardize.norm.has_value());
}

TEST(Config, UnknownKeysAllListed) {
  try {
    Config::from_raw(parse("[efa]\nrotaton = promax\nn_factor = 3\n[extra]\nx = 1\n"));
    FAIL();
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("efa.rotaton"), std::string::npos);
    EXPECT_NE(msg.find("efa.n_factor"), std::string::npos);
    EXPECT_NE(msg.find("[extra]"), std::string::npos);
  }
}

TEST(Config, BadValuesNameTheKey) {
  for (const char* text : {"[efa]\nreplicates = many\n", "[efa]\nrotation = oblimin\n",
                           "[standardize]\nnorm_mean = 3\n", "[efa]\nchoose = guess\n",
                           "[dif]\nalpha = 1.5\n", "[efa]\nallow_ridge = maybe\n"}) {
    EXPECT_THROW(Config::from_raw(parse(text)), UsageError) << text;
  }
  try {
    Config::from_raw(parse("[efa]\nreplicates = many\n"));
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("replicates"), std::string::npos);
  }
}

TEST(Config, SyntaxErrors) {
  EXPECT_THROW(parse("loose = 1\n[scale]\n"), UsageError);
  EXPECT_THROW(parse("[scale]\nmin_score = 1\nmin_score = 2\n"), UsageError);
}

TEST(Config, EnvironmentOverrides) {
  auto raw = parse("[efa]\nn_factors = 2\n");
  apply_env_overrides(raw, {{"PSYMETER_EFA__N_FACTORS", "4"}, {"PSYMETER_SCALE__MAX_SCORE", "7"},
                            {"OTHER", "x"}});
  auto c = Config::from_raw(raw);
  EXPECT_EQ(c.efa.extraction.n_factors, 4u);
  EXPECT_EQ(c.scale.max_score, 7);
  EXPECT_THROW(apply_env_overrides(raw, {{"PSYMETER_EFA", "1"}}), UsageError);
  apply_env_overrides(raw, {{"PSYMETER_EFA__ROTATON", "none"}});
  EXPECT_THROW(Config::from_raw(raw), UsageError);
}

TEST(Config, AuxiliaryColumns) {
  auto c = Config::from_raw(parse(
      "[scale]\ngroup_column = sex\n[validity]\ncriterion_column = gpa\n"
      "[reliability]\nrater_columns = r1, r2\n"));
  EXPECT_EQ(c.auxiliary_columns(), (std::set<std::string>{"gpa", "r1", "r2", "sex"}));
}

TEST(SmallSample, Advisories) {
  EXPECT_EQ(warn_small_sample(25, {}).size(), 1u);
  EXPECT_NE(warn_small_sample(25, {})[0].find("pilot"), std::string::npos);

  auto efa = warn_small_sample(40, {10, true, {}});
  ASSERT_EQ(efa.size(), 1u);
  EXPECT_NE(efa[0].find("observations per item"), std::string::npos);
  EXPECT_TRUE(warn_small_sample(40, {10, false, {}}).empty());

  EXPECT_TRUE(warn_small_sample(500, {10, true, {4, 3}}).empty());
  auto thin = warn_small_sample(500, {10, true, {4, 2}});
  ASSERT_EQ(thin.size(), 1u);
  EXPECT_NE(thin[0].find("factor 2"), std::string::npos);
}

TEST(Report, JsonRoundTripIsLossless) {
  auto data = generate_factor_data(fixtures::three_factor_design(4));
  ScaleSpec scale;
  scale.min_score = -100;
  scale.max_score = 100;
  RawConfig raw = parse("[efa]\nreplicates = 100\n[standardize]\ntransform = none\n");
  auto cfg = Config::from_raw(raw);
  cfg.scale = scale;
  auto result = run_pipeline(cfg, {data, std::nullopt},
                             {Analysis::items, Analysis::efa, Analysis::standardize,
                              Analysis::reliability},
                             "report");
  const auto json = to_json(result.report);
  const auto back = report_from_json(json);
  EXPECT_EQ(back, result.report);
  EXPECT_EQ(to_json(back), json);
  EXPECT_EQ(json.back(), '\n');
  EXPECT_NE(json.find("\"schema_version\": 1"), std::string::npos);

  EXPECT_THROW(report_from_json("{"), DataError);
  EXPECT_THROW(report_from_json("{\"schema_version\": 2}"), DataError);
}

TEST(Report, TextUsesSixSignificantDigits) {
  EvaluationReport r;
  r.tool_version = std::string(tool_version());
  r.command = "reliability";
  ReliabilitySection s;
  s.coefficients.push_back({"cronbach_alpha", 0.123456789, 0.123456789, 10, std::nullopt});
  r.reliability = s;
  const auto text = to_text(r);
  EXPECT_NE(text.find("cronbach_alpha: 0.123457"), std::string::npos);
}

TEST(Pipeline, ThreeFactorReportChoosesThree) {
  TempDir dir;
  RunRequest sim;
  sim.command = "simulate";
  sim.seed = 11;
  sim.out_dir = dir.path() / "sim";
  ASSERT_EQ(invoke(sim).code, 0);

  RunRequest rep;
  rep.command = "report";
  rep.config = dir.write("cfg.ini", kLikertConfig);
  rep.input = dir.path() / "sim" / "simulated.csv";
  rep.out_dir = dir.path() / "out";
  auto o = invoke(rep);
  ASSERT_EQ(o.code, 0) << o.err;
  auto report = report_from_json(slurp(dir.path() / "out" / "report.json"));
  ASSERT_TRUE(report.efa.has_value());
  EXPECT_EQ(report.efa->chosen_count, 3u);
  EXPECT_TRUE(report.item_analysis && report.standardization && report.reliability);
  EXPECT_FALSE(report.validity.has_value());
  EXPECT_FALSE(report.fairness.has_value());
  EXPECT_EQ(o.out, slurp(dir.path() / "out" / "report.json"));
  for (const char* f : {"report.txt", "scree.csv", "scree.svg"}) {
    EXPECT_TRUE(fs::exists(dir.path() / "out" / f)) << f;
  }
}

TEST(Pipeline, SimulateAndReportDeterministic) {
  TempDir dir;
  std::string reports[2];
  for (int run_index = 0; run_index < 2; ++run_index) {
    const auto sub = dir.path() / std::to_string(run_index);
    RunRequest sim;
    sim.command = "simulate";
    sim.seed = 5;
    sim.out_dir = sub;
    ASSERT_EQ(invoke(sim).code, 0);
    RunRequest rep;
    rep.command = "report";
    rep.config = dir.write("cfg.ini", kLikertConfig);
    rep.input = sub / "simulated.csv";
    rep.seed = 5;
    rep.out_dir = sub / "out";
    ASSERT_EQ(invoke(rep).code, 0);
    reports[run_index] = slurp(sub / "out" / "report.json");
  }
  EXPECT_FALSE(reports[0].empty());
  EXPECT_EQ(reports[0], reports[1]);
}

TEST(Pipeline, ExitCodes) {
  TempDir dir;
  RunRequest sim;
  sim.command = "simulate";
  sim.out_dir = dir.path();
  ASSERT_EQ(invoke(sim).code, 0);
  const auto data = dir.path() / "simulated.csv";

  RunRequest bad_key;
  bad_key.command = "efa";
  bad_key.config = dir.write("bad.ini", "[efa]\nrotaton = varimax\n");
  bad_key.input = data;
  auto o = invoke(bad_key);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("rotaton"), std::string::npos);

  RunRequest no_input;
  no_input.command = "item-analysis";
  EXPECT_EQ(invoke(no_input).code, 1);

  RunRequest unknown;
  unknown.command = "frobnicate";
  EXPECT_EQ(invoke(unknown).code, 1);

  RunRequest out_of_range;
  out_of_range.command = "item-analysis";
  out_of_range.config = dir.write("narrow.ini", "[scale]\nmin_score = 1\nmax_score = 2\n");
  out_of_range.input = data;
  EXPECT_EQ(invoke(out_of_range).code, 2);

  RunRequest missing_dif;
  missing_dif.command = "dif";
  missing_dif.config = dir.write("likert.ini", kLikertConfig);
  missing_dif.input = data;
  EXPECT_EQ(invoke(missing_dif).code, 1);

  // Two identical columns make the correlation matrix singular.
  const auto dup = dir.write("dup.csv",
                             "participant_id,a,b,c\np1,1,1,2\np2,2,2,1\np3,3,3,3\np4,4,4,1\np5,2,2,4\n");
  RunRequest singular;
  singular.command = "efa";
  singular.config = dir.write("ridge.ini",
                              "[scale]\nmin_score = 1\nmax_score = 4\n[efa]\nallow_ridge = false\n"
                              "replicates = 100\n");
  singular.input = dup;
  EXPECT_EQ(invoke(singular).code, 3);
}

TEST(Pipeline, DifSectionOnSimulatedGroups) {
  TempDir dir;
  const auto cfg = dir.write("dif.ini",
                             "[scale]\nmin_score = 0\nmax_score = 1\ngroup_column = group\n"
                             "[simulate]\nmodel = dif\nn = 1000\nfactors = 1\nitems_per_factor = 8\n"
                             "likert_min = 0\nlikert_max = 1\ndif_magnitude = 0.8\n");
  RunRequest sim;
  sim.command = "simulate";
  sim.config = cfg;
  sim.seed = 2;
  sim.out_dir = dir.path();
  ASSERT_EQ(invoke(sim).code, 0);
  RunRequest dif;
  dif.command = "dif";
  dif.config = cfg;
  dif.input = dir.path() / "simulated.csv";
  dif.out_dir = dir.path() / "out";
  auto o = invoke(dif);
  ASSERT_EQ(o.code, 0) << o.err;
  auto report = report_from_json(o.out);
  ASSERT_TRUE(report.fairness.has_value());
  EXPECT_EQ(report.fairness->reference, "reference");
  EXPECT_EQ(report.fairness->levels, (std::vector<std::string>{"focal", "reference"}));
  const auto& first = report.fairness->dif.front();
  EXPECT_EQ(first.item, "item01");
  EXPECT_EQ(first.method, "mh");
  EXPECT_TRUE(first.flagged);
  EXPECT_EQ(report.fairness->dtf.size(), 3u);
}

TEST(Pipeline, RetestAndValidityColumns) {
  TempDir dir;
  const auto cfg = dir.write("rt.ini",
                             "[scale]\nmin_score = -100\nmax_score = 100\n"
                             "[simulate]\nmodel = retest\nn = 500\n");
  RunRequest sim;
  sim.command = "simulate";
  sim.config = cfg;
  sim.out_dir = dir.path();
  ASSERT_EQ(invoke(sim).code, 0);
  RunRequest rel;
  rel.command = "reliability";
  rel.config = cfg;
  rel.input = dir.path() / "simulated.csv";
  rel.input2 = dir.path() / "simulated_retest.csv";
  rel.out_dir = dir.path() / "rel";
  auto o = invoke(rel);
  ASSERT_EQ(o.code, 0) << o.err;
  auto report = report_from_json(o.out);
  ASSERT_TRUE(report.reliability.has_value());
  ASSERT_EQ(report.reliability->coefficients.size(), 1u);
  EXPECT_EQ(report.reliability->coefficients[0].kind, "test_retest");
  EXPECT_NEAR(report.reliability->coefficients[0].value, 0.8, 0.05);
  ASSERT_TRUE(report.reliability->sem.has_value());
  EXPECT_EQ(report.reliability->sem->based_on, "test_retest");

  const auto csv = dir.write("v.csv",
                             "participant_id,a,b,crit\np1,1,2,3\np2,2,2,4.5\np3,3,4,7\np4,4,3,6\n"
                             "p5,5,5,10\n");
  RunRequest val;
  val.command = "validity";
  val.config = dir.write("v.ini", "[scale]\nmin_score = 1\nmax_score = 5\n[validity]\ncriterion_column = crit\n");
  val.input = csv;
  val.out_dir = dir.path() / "val";
  o = invoke(val);
  ASSERT_EQ(o.code, 0) << o.err;
  report = report_from_json(o.out);
  ASSERT_TRUE(report.validity.has_value());
  EXPECT_EQ(report.validity->results[0].kind, "predictive");
  EXPECT_TRUE(*report.validity->results[0].meets_threshold);
  EXPECT_EQ(report.advisories.size(), 1u);  // n=5 is below the pilot minimum
}
