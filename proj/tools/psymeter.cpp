#include <psymeter/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
  std::string config, input, input2, out_dir = ".", format = "json";
  std::uint64_t seed = 0;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
  cmd.add_option("--input", f.input, "Response CSV")->check(CLI::ExistingFile);
  cmd.add_option("--input2", f.input2, "Second administration or parallel form CSV")
      ->check(CLI::ExistingFile);
  cmd.add_option("--out-dir", f.out_dir, "Directory for report and chart files");
  cmd.add_option("--seed", f.seed, "Seed for simulation and parallel analysis");
  cmd.add_option("--format", f.format, "Report format on stdout")
      ->check(CLI::IsMember({"json", "text"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Psychometric test evaluation: item analysis, factor analysis, norms, reliability, validity and DIF"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"item-analysis", "Item facility, variance and discrimination"},
      {"efa", "Factor-count advice and a rotated factor solution"},
      {"standardize", "z, T, stanine and sten scores"},
      {"reliability", "Internal consistency, test-retest and rater agreement"},
      {"validity", "Predictive, concurrent and differential validity"},
      {"dif", "Group facility, Mantel-Haenszel and logistic DIF"},
      {"simulate", "Generate a synthetic data set"},
      {"report", "Full pipeline in development order"},
  };
  for (const auto& [name, help] : commands) add_flags(*app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  psymeter::RunRequest req;
  auto* sub = app.get_subcommands().front();
  req.command = sub->get_name();
  if (!flags.config.empty()) req.config = flags.config;
  if (!flags.input.empty()) req.input = flags.input;
  if (!flags.input2.empty()) req.input2 = flags.input2;
  req.out_dir = flags.out_dir;
  if (sub->count("--seed")) req.seed = flags.seed;
  req.format = flags.format == "text" ? psymeter::OutputFormat::text : psymeter::OutputFormat::json;
  return psymeter::run(req, std::cout, std::cerr);
}
