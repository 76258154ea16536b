#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/experiment.hpp"

using namespace fairrec;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fairrec_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Data rows of a result CSV, skipping provenance comments and the header.
std::vector<std::vector<std::string>> data_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(detail::split_commas(line));
  }
  return rows;
}

std::string header_of(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("#")) return line;
  }
  return {};
}

UtilityMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_utility_csv(in, "mem");
}

std::string io_error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const IoError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig two_type_config(const std::string& dir) {
  ExperimentConfig c;
  c.values = {3, 2, 1};
  c.alpha = 0.5;
  c.users = 10;
  c.out = dir;
  return c;
}

}  // namespace

TEST(FormatNumber, TwelveSignificantDigits) {
  EXPECT_EQ(format_number(3.0 / 7.0), "0.428571428571");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(CsvField, QuotesSeparators) {
  EXPECT_EQ(csv_field("optimal"), "optimal");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(LoadUtilityCsv, DiverseTwoByTwo) {
  const auto w = parse("user_id,a,b\nu1,0.9,0.1\nu2,0.1,0.9\n");
  ASSERT_EQ(w.users(), 2u);
  ASSERT_EQ(w.items(), 2u);
  EXPECT_DOUBLE_EQ(w(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(w(1, 0), 0.1);
  EXPECT_EQ(w.user_id(1), "u2");
  EXPECT_EQ(w.item_id(1), "b");
  EXPECT_NEAR(price_of_fairness(w, ItemUtilityModel::symmetric(), FairnessMeasure::max_min()),
              0.0, 1e-6);
}

TEST(LoadUtilityCsv, AcceptsMissingFinalNewline) {
  EXPECT_EQ(parse("user_id,a\nu1,2").users(), 1u);
}

TEST(LoadUtilityCsv, ZeroEntryNamesTheCell) {
  const auto msg = io_error_of("user_id,a,b\nu1,0.9,0.1\nu2,0,0.9\n");
  EXPECT_NE(msg.find("strictly positive"), std::string::npos) << msg;
  EXPECT_NE(msg.find("user 'u2' (row 2)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("item 'a' (column 1)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("mem:3"), std::string::npos) << msg;
}

TEST(LoadUtilityCsv, RejectsMalformedInput) {
  EXPECT_NE(io_error_of("user,a,b\nu1,1,2\n").find("malformed header"), std::string::npos);
  EXPECT_NE(io_error_of("user_id\nu1\n").find("no item columns"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a,a\nu1,1,2\n").find("duplicate item"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a,b\nu1,1,2\nu2,1\n").find("ragged row"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a,b\nu1,1,2,3\n").find("ragged row"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\nu1,x\n").find("not a number"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\nu1,-1\n").find("strictly positive"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\nu1,inf\n").find("strictly positive"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\nu1,1\nu1,2\n").find("duplicate user"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\r\nu1,1\r\n").find("LF"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\n\nu1,1\n").find("blank line"), std::string::npos);
  EXPECT_NE(io_error_of("user_id,a\n").find("no user rows"), std::string::npos);
  EXPECT_NE(io_error_of("").find("empty file"), std::string::npos);
}

TEST(LoadUtilityCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_utility_csv("/nonexistent/matrix.csv"), IoError);
}

TEST(LoadUtilityCsv, RoundTripPreservesTwelveDigits) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-4, 1e4);
  std::vector<double> vals(7 * 4);
  for (auto& x : vals) x = u(rng);
  const UtilityMatrix w(7, 4, vals);
  const auto back = parse(utility_csv_text(w));
  ASSERT_EQ(back.users(), 7u);
  ASSERT_EQ(back.items(), 4u);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    EXPECT_NEAR(back.values()[i], vals[i], 5e-12 * vals[i]);
    EXPECT_EQ(format_number(back.values()[i]), format_number(vals[i]));
  }
  // A second round trip is exact.
  EXPECT_EQ(utility_csv_text(back), utility_csv_text(parse(utility_csv_text(back))));
}

TEST(GammaGrid, CountAndList) {
  EXPECT_EQ(parse_gamma_grid("3"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(parse_gamma_grid("0,0.25,1"), (std::vector<double>{0.0, 0.25, 1.0}));
  EXPECT_EQ(parse_gamma_grid("1.0"), (std::vector<double>{1.0}));
  EXPECT_THROW(parse_gamma_grid("1"), ConfigError);
  EXPECT_THROW(parse_gamma_grid("0,1.5"), ConfigError);
  EXPECT_THROW(parse_gamma_grid("0.5,0.5"), ConfigError);
  EXPECT_THROW(parse_gamma_grid("a"), ConfigError);
  EXPECT_THROW(parse_gamma_grid(""), ConfigError);
}

TEST(AlphaGrid, CountAndList) {
  const auto g = parse_alpha_grid("9");
  ASSERT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g.front(), 0.1);
  EXPECT_DOUBLE_EQ(g.back(), 0.9);
  EXPECT_THROW(parse_alpha_grid("0,0.5"), ConfigError);
  EXPECT_THROW(parse_alpha_grid("0.5,1"), ConfigError);
}

TEST(RunCommand, GenerateThenTradeoffFromFile) {
  const auto dir = fresh_dir("gen");
  auto g = two_type_config((dir / "gen").string());
  g.command = Command::Generate;
  ASSERT_EQ(run_command(g).exit_code, kExitOk);
  const auto w = load_utility_csv(dir / "gen" / "matrix.csv");
  EXPECT_EQ(w.users(), 10u);
  EXPECT_TRUE(fs::exists(dir / "gen" / "provenance.json"));

  ExperimentConfig t;
  t.command = Command::Tradeoff;
  t.matrix = (dir / "gen" / "matrix.csv").string();
  t.gammas = "0,0.5,1";
  t.out = (dir / "tr").string();
  t.svg = (dir / "tr" / "curve.svg").string();
  const auto res = run_command(t);
  ASSERT_EQ(res.exit_code, kExitOk) << res.message;
  EXPECT_EQ(header_of(dir / "tr" / "curve.csv"),
            "gamma,if_star,if_target,uf_achieved,if_achieved,status,solve_ms");
  const auto rows = data_rows(dir / "tr" / "curve.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(std::stod(rows[0][3]), 1.0, 1e-9);
  EXPECT_NEAR(std::stod(rows[2][1]), 3.0 / 7.0, 1e-9);
  EXPECT_NEAR(std::stod(rows[2][3]), 6.0 / 7.0, 1e-6);
  for (const auto& r : rows) EXPECT_EQ(r[5], "optimal");
  EXPECT_TRUE(slurp(dir / "tr" / "curve.svg").starts_with("<svg"));
}

TEST(RunCommand, MisestimationExample) {
  const auto dir = fresh_dir("misest");
  ExperimentConfig c;
  c.command = Command::Misest;
  c.population = "misest";
  c.values = {3, 2, 1};
  c.beta = 0.4;
  c.users = 10;
  c.gammas = "0,1";
  c.scope = "misest-group";
  c.out = dir.string();
  const auto res = run_command(c);
  ASSERT_EQ(res.exit_code, kExitOk) << res.message;
  const auto rows = data_rows(dir / "misest.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(std::stod(rows[0][4]), 1.0 / 3.0, 1e-6);
  // gamma = 1 from the closed forms: cold users get z, the baseline is uf1.
  const auto ms = misest_solution({{3, 2, 1}, 0.4});
  const auto tt = two_type_solution({{3, 2, 1}, 0.5});
  const double cold = std::min(ms.z[0] * 3 + ms.z[1] * 2 + ms.z[2] * 1,
                               ms.z[0] * 1 + ms.z[1] * 2 + ms.z[2] * 3) / 3.0;
  EXPECT_NEAR(std::stod(rows[1][4]), 1.0 - cold / tt.uf1, 1e-6);
  EXPECT_NEAR(std::stod(rows[1][4]), 2.0 / 9.0, 1e-6);
}

TEST(RunCommand, ValidateClosedFormReportsPass) {
  const auto dir = fresh_dir("validate");
  ExperimentConfig c;
  c.command = Command::ValidateClosedForm;
  c.values = {3, 2, 1};
  c.alphas = "9";
  c.users = 1000;
  c.out = dir.string();
  const auto res = run_command(c);
  ASSERT_EQ(res.exit_code, kExitOk) << res.message;
  EXPECT_EQ(data_rows(dir / "closed_form.csv").size(), 9u);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_LT(report["max_if_star_abs_err"].get<double>(), 1e-6);
  EXPECT_LT(report["max_uf1_abs_err"].get<double>(), 1e-6);
}

TEST(RunCommand, SweepAlphaIsVShaped) {
  const auto dir = fresh_dir("sweep");
  ExperimentConfig c;
  c.command = Command::SweepAlpha;
  c.values = {5, 3, 2, 1};
  c.alphas = "19";
  c.users = 1000;
  c.out = dir.string();
  ASSERT_EQ(run_command(c).exit_code, kExitOk);
  const auto rows = data_rows(dir / "pof_alpha.csv");
  ASSERT_EQ(rows.size(), 19u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = std::stod(rows[i][0]);
    const double prev = std::stod(rows[i - 1][4]);
    const double cur = std::stod(rows[i][4]);
    if (a <= 0.5) {
      EXPECT_LE(cur, prev + 1e-9) << a;
    } else {
      EXPECT_GE(cur, prev - 1e-9) << a;
    }
    EXPECT_NEAR(std::stod(rows[i][4]), std::stod(rows[i][5]), 1e-6);
  }
}

TEST(RunCommand, PofMultiRunSummary) {
  const auto dir = fresh_dir("pof");
  ExperimentConfig c;
  c.command = Command::Pof;
  c.population = "random";
  c.users = 6;
  c.items = 4;
  c.runs = 3;
  c.seed = 42;
  c.out = dir.string();
  ASSERT_EQ(run_command(c).exit_code, kExitOk);
  const auto rows = data_rows(dir / "pof.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2][1], "44");
  const auto summary = data_rows(dir / "pof_summary.csv");
  ASSERT_EQ(summary.size(), 1u);
  double mean = 0.0;
  for (const auto& r : rows) mean += std::stod(r[4]) / 3.0;
  EXPECT_NEAR(std::stod(summary[0][1]), mean, 1e-9);
}

TEST(RunCommand, TradeoffRunsAppendSummary) {
  const auto dir = fresh_dir("runs");
  ExperimentConfig c;
  c.command = Command::Tradeoff;
  c.population = "random";
  c.users = 5;
  c.items = 3;
  c.runs = 2;
  c.gammas = "3";
  c.out = dir.string();
  ASSERT_EQ(run_command(c).exit_code, kExitOk);
  EXPECT_EQ(data_rows(dir / "curve.csv").size(), 6u);
  EXPECT_EQ(header_of(dir / "curve_summary.csv"),
            "gamma,runs,uf_mean,uf_stderr,if_mean,if_stderr");
  EXPECT_EQ(data_rows(dir / "curve_summary.csv").size(), 3u);
}

TEST(RunCommand, ExitCodesAndErrorRecords) {
  {
    const auto dir = fresh_dir("err_config");
    auto c = two_type_config(dir.string());
    c.command = Command::Tradeoff;
    c.gammas = "0,2";
    const auto res = run_command(c);
    EXPECT_EQ(res.exit_code, kExitConfig);
    const auto j = nlohmann::json::parse(slurp(dir / "error.json"));
    EXPECT_EQ(j["kind"], "config_error");
    EXPECT_EQ(j["exit_code"], 2);
  }
  {
    const auto dir = fresh_dir("err_nash_price");
    auto c = two_type_config(dir.string());
    c.command = Command::Pof;
    c.measure = "nash";
    EXPECT_EQ(run_command(c).exit_code, kExitConfig);
  }
  {
    const auto dir = fresh_dir("err_io");
    ExperimentConfig c;
    c.command = Command::Tradeoff;
    c.matrix = "/nonexistent/matrix.csv";
    c.out = dir.string();
    EXPECT_EQ(run_command(c).exit_code, kExitIo);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "error.json"))["kind"], "io_error");
  }
  {
    // An unreachable Nash certificate makes every constrained row fail.
    const auto dir = fresh_dir("err_solver");
    auto c = two_type_config(dir.string());
    c.command = Command::Tradeoff;
    c.measure = "nash";
    c.delta = 0.5;
    c.gammas = "0.5,1.0";
    c.nash_gap = 1e-300;
    const auto res = run_command(c);
    EXPECT_EQ(res.exit_code, kExitSolver) << res.message;
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "error.json"))["kind"], "solver_failure");
  }
}

TEST(RunCommand, OutputsEmbedProvenance) {
  const auto dir = fresh_dir("prov");
  auto c = two_type_config(dir.string());
  c.command = Command::Tradeoff;
  c.gammas = "3";
  ASSERT_EQ(run_command(c).exit_code, kExitOk);
  const std::string csv = slurp(dir / "curve.csv");
  ASSERT_TRUE(csv.starts_with("# provenance: "));
  const auto first = csv.substr(14, csv.find('\n') - 14);
  const auto prov = nlohmann::json::parse(first);
  EXPECT_EQ(prov["tool"], "fairrec");
  EXPECT_EQ(prov["version"], kToolVersion);
  EXPECT_EQ(prov["config"]["gammas"], "3");
  EXPECT_EQ(prov["tolerances"]["lp_feasibility"], 1e-7);
  EXPECT_EQ(prov["seeds"].size(), 1u);
  const auto file = nlohmann::json::parse(slurp(dir / "provenance.json"));
  EXPECT_EQ(file["outputs"].size(), 2u);
}

TEST(RunCommand, RerunsReproduceNumericColumns) {
  auto strip_time = [](const fs::path& p) {
    std::string out;
    for (auto r : data_rows(p)) {
      r.pop_back();  // solve_ms is wall time
      for (const auto& f : r) out += f + ",";
      out += "\n";
    }
    return out;
  };
  for (const std::string measure : {"maxmin", "sumkmin", "nash"}) {
    const auto a = fresh_dir("repro_a_" + measure);
    const auto b = fresh_dir("repro_b_" + measure);
    ExperimentConfig c;
    c.command = Command::Tradeoff;
    c.population = "random";
    c.users = 7;
    c.items = 4;
    c.seed = 3;
    c.measure = measure;
    c.k = 2;
    c.delta = 0.3;
    c.gammas = "5";
    c.out = a.string();
    ASSERT_EQ(run_command(c).exit_code, kExitOk);
    c.out = b.string();
    c.parallel = false;
    ASSERT_EQ(run_command(c).exit_code, kExitOk);
    EXPECT_EQ(strip_time(a / "curve.csv"), strip_time(b / "curve.csv")) << measure;
    EXPECT_EQ(slurp(a / "provenance.json"), slurp(b / "provenance.json")) << measure;
  }
  const auto a = fresh_dir("repro_gen_a");
  const auto b = fresh_dir("repro_gen_b");
  ExperimentConfig g;
  g.command = Command::Generate;
  g.population = "misest";
  g.values = {4, 3, 2, 1};
  g.beta = 0.3;
  g.users = 20;
  g.seed = 9;
  g.out = a.string();
  ASSERT_EQ(run_command(g).exit_code, kExitOk);
  g.out = b.string();
  ASSERT_EQ(run_command(g).exit_code, kExitOk);
  EXPECT_EQ(slurp(a / "matrix.csv"), slurp(b / "matrix.csv"));
  EXPECT_EQ(slurp(a / "estimate.csv"), slurp(b / "estimate.csv"));
}
