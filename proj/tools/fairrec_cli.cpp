// Command-line front end: parses flags into an ExperimentConfig and runs it.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fairrec/experiment.hpp"

namespace {

using fairrec::Command;
using fairrec::ExperimentConfig;

void add_common(CLI::App* app, ExperimentConfig& c) {
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--tie-break", c.tie_break, "solver|canonical")->capture_default_str();
  app->add_option("--lp-tolerance", c.lp_tolerance, "LP feasibility and optimality tolerance");
  app->add_option("--nash-gap", c.nash_gap, "Required Nash optimality certificate");
}

void add_population(CLI::App* app, ExperimentConfig& c) {
  app->add_option("--population", c.population, "two-type|homogeneous|misest|random")
      ->capture_default_str();
  app->add_option("--values", c.values, "Utility sequence v, comma separated")->delimiter(',');
  app->add_option("--alpha", c.alpha, "Fraction of type-1 users (two-type)");
  app->add_option("--beta", c.beta, "Fraction of each known type (misest)")->capture_default_str();
  app->add_option("--users", c.users, "Number of users m")->capture_default_str();
  app->add_option("--items", c.items, "Number of items n (random)")->capture_default_str();
  app->add_option("--seed", c.seed, "Seed for generated populations")->capture_default_str();
}

void add_problem(CLI::App* app, ExperimentConfig& c) {
  app->add_option("--matrix", c.matrix, "Utility matrix CSV");
  app->add_option("--measure", c.measure, "maxmin|nash|sumkmin")->capture_default_str();
  app->add_option("--k", c.k, "k for sumkmin")->capture_default_str();
  app->add_option("--delta", c.delta, "Item utility model: 0 symmetric, 1 exposure")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig c;
  CLI::App app{"Fairness tradeoffs in two-sided recommendation"};
  app.set_version_flag("--version", std::string(fairrec::kToolVersion));
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic utility matrix");
  std::string kind;
  gen->add_option("kind", kind, "two-type|homogeneous|misest|random")
      ->required()
      ->check(CLI::IsMember({"two-type", "homogeneous", "misest", "random"}));
  add_population(gen, c);
  add_common(gen, c);
  gen->callback([&] {
    c.command = Command::Generate;
    c.population = kind;
  });

  auto* trade = app.add_subcommand("tradeoff", "Sweep UF*(gamma) over a gamma grid");
  add_problem(trade, c);
  add_population(trade, c);
  add_common(trade, c);
  trade->add_option("--gammas", c.gammas, "Point count or comma list in [0, 1]")
      ->capture_default_str();
  trade->add_option("--runs", c.runs, "Repetitions over seeds seed, seed+1, ...")
      ->capture_default_str();
  trade->add_option("--svg", c.svg, "Also write an SVG chart to this path");
  trade->callback([&] { c.command = Command::Tradeoff; });

  auto* pof = app.add_subcommand("pof", "Price of fairness (UF*(0) - UF*(1)) / UF*(0)");
  add_problem(pof, c);
  add_population(pof, c);
  add_common(pof, c);
  pof->add_option("--runs", c.runs, "Repetitions over seeds")->capture_default_str();
  pof->callback([&] { c.command = Command::Pof; });

  auto* mis = app.add_subcommand("misest", "Price of misestimation per gamma");
  add_problem(mis, c);
  add_population(mis, c);
  add_common(mis, c);
  mis->add_option("--estimate", c.estimate, "Estimated utility matrix CSV");
  mis->add_option("--gammas", c.gammas, "Point count or comma list in [0, 1]")
      ->capture_default_str();
  mis->add_option("--scope", c.scope, "all|misest-group")->capture_default_str();
  mis->callback([&] {
    c.command = Command::Misest;
    if (c.matrix.empty()) c.population = "misest";
  });

  auto* val = app.add_subcommand("validate-closed-form",
                                 "Compare LP and analytic two-type solutions over an alpha grid");
  add_problem(val, c);
  add_population(val, c);
  add_common(val, c);
  val->add_option("--alphas", c.alphas, "Point count or comma list in (0, 1)")
      ->capture_default_str();
  val->callback([&] { c.command = Command::ValidateClosedForm; });

  auto* sweep = app.add_subcommand("sweep-alpha", "Two-type price of fairness as alpha varies");
  add_problem(sweep, c);
  add_population(sweep, c);
  add_common(sweep, c);
  sweep->add_option("--alphas", c.alphas, "Point count or comma list in (0, 1)")
      ->capture_default_str();
  sweep->add_option("--svg", c.svg, "Also write an SVG chart to this path");
  sweep->callback([&] { c.command = Command::SweepAlpha; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (c.out != ".") fairrec::detail::write_error_record(c, fairrec::kExitConfig, e.what());
    return fairrec::kExitConfig;
  }
  // Two-type grids need alpha m to be integral; default to a large m.
  for (auto* s : {val, sweep}) {
    if (s->parsed() && s->get_option("--users")->count() == 0) c.users = 1000;
  }

  const auto res = fairrec::run_command(c);
  if (res.exit_code == fairrec::kExitOk) {
    std::cout << res.message << "\n";
  } else {
    std::cerr << fmt::format("error ({}): {}\n", fairrec::detail::error_kind(res.exit_code),
                             res.message);
  }
  return res.exit_code;
}
