#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "conecurve/cli.hpp"

namespace cc = conecurve::cli;

int main(int argc, char** argv) {
  CLI::App app{"Self-similar curvature flows of curves on the light cone"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> flags;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
    for (const char* key : {"a", "c", "alpha0", "tau0", "eta0", "span", "seed", "out"}) {
      sub->add_option(std::string("--") + key, flags[key]);
    }
    sub->add_option("--vector", flags["vector"])->check(CLI::IsMember({"timelike", "lightlike", "spacelike"}));
    sub->add_option("--flow", flags["flow"])->check(CLI::IsMember({"cf", "icf"}));
    sub->add_option("--rel-tol", flags["rel_tol"]);
    sub->add_option("--abs-tol", flags["abs_tol"]);
    sub->add_option("--k", flags["k"], "curvature for homothety");
    sub->add_option("--t", flags["t"], "comma-separated times for homothety");
    sub->add_option("--name", flags["name"], "output file prefix");
    sub->add_flag("--svg", "write SVG figures");
  };

  const std::map<std::string, int (*)(const cc::RunConfig&, std::ostream&)> commands{
      {"simulate", cc::cmd_simulate}, {"reconstruct", cc::cmd_reconstruct}, {"homothety", cc::cmd_homothety},
      {"soliton", cc::cmd_soliton},   {"verify", cc::cmd_verify},           {"sweep", cc::cmd_sweep}};
  const std::map<std::string, std::string> help{
      {"simulate", "integrate the reduced system and record events"},
      {"reconstruct", "rebuild the curve on the cone, split inverse-flow components"},
      {"homothety", "tabulate scaling solutions of constant-curvature curves"},
      {"soliton", "evaluate the closed-form lightlike soliton against integration"},
      {"verify", "check invariants and curve identities for one configuration"},
      {"sweep", "run seeded batches over a grid of (a, c)"}};
  for (const auto& [name, fn] : commands) add_flags(app.add_subcommand(name, help.at(name)));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cc::kBadInput;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    cc::KeyValues kv;
    if (!config_path.empty()) kv = conecurve::io::read_config(config_path);
    if (kv.find("name") == kv.end()) kv["name"] = sub->get_name();
    for (const auto& [key, value] : flags) {
      const std::string opt = key == "rel_tol" ? "--rel-tol" : key == "abs_tol" ? "--abs-tol" : "--" + key;
      if (sub->count(opt) > 0) kv[key] = value;
    }
    if (sub->count("--svg") > 0) kv["svg"] = "true";
    if (const char* env = std::getenv("CONECURVE_OUT"); env && *env) kv["out"] = env;
    const cc::RunConfig rc = cc::make_run_config(kv);
    return commands.at(sub->get_name())(rc, std::cout);
  } catch (const conecurve::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cc::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cc::kIntegratorFailure;
  }
}
