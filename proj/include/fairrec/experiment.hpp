#pragma once

// Experiment orchestration: matrix CSV ingestion, command execution and
// result serialization. The command-line front end only parses flags into an
// ExperimentConfig and calls run_command.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fairrec/closed_forms.hpp"
#include "fairrec/core_model.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/fair_optimizer.hpp"
#include "fairrec/population_gen.hpp"

#ifndef FAIRREC_VERSION
#define FAIRREC_VERSION "0.0.0"
#endif

namespace fairrec {

inline constexpr const char* kToolName = "fairrec";
inline constexpr const char* kToolVersion = FAIRREC_VERSION;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitIo = 4 };

// ---------------------------------------------------------------------------
// Number and CSV formatting

// 12 significant digits: enough to check 1e-6 tolerances, stable across runs.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // folds -0
  return fmt::format("{:.12g}", x);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Utility matrix CSV

namespace detail {

inline std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

// Parses the matrix format: header `user_id,<item ids>`, then one row per user
// with an id and n strictly positive decimals. LF line endings only.
inline UtilityMatrix parse_utility_csv(std::istream& in, const std::string& source = "<input>") {
  auto fail = [&](std::size_t line, const std::string& what) -> IoError {
    return IoError(fmt::format("{}:{}: {}", source, line, what));
  };
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  if (text.find('\r') != std::string::npos) {
    throw IoError(fmt::format("{}: CR characters found; line endings must be LF", source));
  }
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      const std::size_t pos = text.find('\n', start);
      if (pos == std::string::npos) {
        lines.push_back(text.substr(start));
        break;
      }
      lines.push_back(text.substr(start, pos - start));
      start = pos + 1;
    }
  }
  if (lines.empty()) throw IoError(fmt::format("{}: empty file", source));

  const auto header = detail::split_commas(lines[0]);
  if (header.front() != "user_id") {
    throw fail(1, fmt::format("malformed header: first column must be 'user_id', got '{}'",
                              header.front()));
  }
  if (header.size() < 2) throw fail(1, "malformed header: no item columns");
  std::vector<std::string> item_ids(header.begin() + 1, header.end());
  std::set<std::string> seen_items;
  for (const auto& id : item_ids) {
    if (id.empty()) throw fail(1, "malformed header: empty item id");
    if (!seen_items.insert(id).second) throw fail(1, fmt::format("duplicate item id '{}'", id));
  }
  const std::size_t n = item_ids.size();

  std::vector<std::string> user_ids;
  std::set<std::string> seen_users;
  std::vector<double> values;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t lineno = li + 1;
    if (lines[li].empty()) throw fail(lineno, "blank line");
    const auto cells = detail::split_commas(lines[li]);
    if (cells.size() != n + 1) {
      throw fail(lineno, fmt::format("ragged row: {} values, expected {}", cells.size() - 1, n));
    }
    const std::string& uid = cells.front();
    if (uid.empty()) throw fail(lineno, "empty user id");
    if (!seen_users.insert(uid).second) throw fail(lineno, fmt::format("duplicate user id '{}'", uid));
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = detail::parse_double(cells[j + 1]);
      const std::string cell = fmt::format("user '{}' (row {}), item '{}' (column {})", uid,
                                           user_ids.size() + 1, item_ids[j], j + 1);
      if (!v) throw fail(lineno, fmt::format("not a number at {}: '{}'", cell, cells[j + 1]));
      if (!std::isfinite(*v) || !(*v > 0.0)) {
        throw fail(lineno, fmt::format("utility must be strictly positive at {}: {}", cell,
                                       cells[j + 1]));
      }
      values.push_back(*v);
    }
    user_ids.push_back(uid);
  }
  if (user_ids.empty()) throw IoError(fmt::format("{}: no user rows", source));
  const std::size_t m = user_ids.size();
  return UtilityMatrix(m, n, std::move(values), std::nullopt, std::move(user_ids),
                       std::move(item_ids));
}

inline UtilityMatrix load_utility_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open matrix file '{}'", path.string()));
  return parse_utility_csv(in, path.string());
}

inline std::string utility_csv_text(const UtilityMatrix& w) {
  std::string out;
  std::vector<std::string> header{"user_id"};
  for (std::size_t j = 0; j < w.items(); ++j) header.push_back(w.item_id(j));
  out += csv_line(header);
  for (std::size_t i = 0; i < w.users(); ++i) {
    std::vector<std::string> row{w.user_id(i)};
    for (std::size_t j = 0; j < w.items(); ++j) row.push_back(format_number(w(i, j)));
    out += csv_line(row);
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

inline void write_utility_csv(const std::filesystem::path& path, const UtilityMatrix& w) {
  write_text(path, utility_csv_text(w));
}

// ---------------------------------------------------------------------------
// Configuration

enum class Command { Generate, Tradeoff, Pof, Misest, ValidateClosedForm, SweepAlpha };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::Generate: return "generate";
    case Command::Tradeoff: return "tradeoff";
    case Command::Pof: return "pof";
    case Command::Misest: return "misest";
    case Command::ValidateClosedForm: return "validate-closed-form";
    case Command::SweepAlpha: return "sweep-alpha";
  }
  return "unknown";
}

struct ExperimentConfig {
  Command command = Command::Tradeoff;
  std::string population = "two-type";  // two-type | homogeneous | misest | random
  std::string matrix;                    // input matrix path; empty means generate
  std::string estimate;                  // estimated matrix path for misest
  std::vector<double> values;
  std::optional<double> alpha;
  double beta = 0.25;
  std::size_t users = 10;
  std::size_t items = 5;  // random population only
  std::string gammas = "5";
  std::string alphas = "9";
  std::string measure = "maxmin";
  std::size_t k = 1;
  double delta = 0.0;
  std::string scope = "all";
  std::string tie_break = "canonical";
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  std::string out = ".";
  std::string svg;  // optional SVG path for tradeoff
  std::optional<double> lp_tolerance;
  std::optional<double> nash_gap;
  bool parallel = true;

  nlohmann::json echo() const {
    nlohmann::json j;
    j["command"] = to_string(command);
    j["population"] = population;
    j["matrix"] = matrix;
    j["estimate"] = estimate;
    j["values"] = values;
    j["alpha"] = alpha ? nlohmann::json(*alpha) : nlohmann::json(nullptr);
    j["beta"] = beta;
    j["users"] = users;
    j["items"] = items;
    j["gammas"] = gammas;
    j["alphas"] = alphas;
    j["measure"] = measure;
    j["k"] = k;
    j["delta"] = delta;
    j["scope"] = scope;
    j["tie_break"] = tie_break;
    j["seed"] = seed;
    j["runs"] = runs;
    j["svg"] = svg;
    return j;
  }
};

// A grid given as an explicit comma list ("0,0.5,1") or as a point count.
// For gammas a count N >= 2 means N evenly spaced points on [0, 1].
inline std::vector<double> parse_gamma_grid(const std::string& spec) {
  if (spec.empty()) throw ConfigError("empty gamma grid");
  std::vector<double> out;
  const bool is_count = spec.find_first_of(",.eE") == std::string::npos;
  if (is_count) {
    std::size_t count = 0;
    const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), count);
    if (ec != std::errc() || ptr != spec.data() + spec.size() || count < 2) {
      throw ConfigError(fmt::format("gamma grid '{}': a count must be an integer >= 2", spec));
    }
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return out;
  }
  for (const auto& tok : detail::split_commas(spec)) {
    const auto v = detail::parse_double(tok);
    if (!v) throw ConfigError(fmt::format("gamma grid '{}': bad entry '{}'", spec, tok));
    if (!(*v >= 0.0 && *v <= 1.0)) {
      throw ConfigError(fmt::format("gamma grid '{}': {} is outside [0, 1]", spec, *v));
    }
    if (!out.empty() && !(*v > out.back())) {
      throw ConfigError(fmt::format("gamma grid '{}' must be strictly increasing", spec));
    }
    out.push_back(*v);
  }
  return out;
}

// Alpha grids live in (0, 1): a count N gives k / (N + 1), k = 1..N.
inline std::vector<double> parse_alpha_grid(const std::string& spec) {
  if (spec.empty()) throw ConfigError("empty alpha grid");
  std::vector<double> out;
  const bool is_count = spec.find_first_of(",.eE") == std::string::npos;
  if (is_count) {
    std::size_t count = 0;
    const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), count);
    if (ec != std::errc() || ptr != spec.data() + spec.size() || count < 1) {
      throw ConfigError(fmt::format("alpha grid '{}': a count must be an integer >= 1", spec));
    }
    for (std::size_t i = 1; i <= count; ++i) {
      out.push_back(static_cast<double>(i) / static_cast<double>(count + 1));
    }
    return out;
  }
  for (const auto& tok : detail::split_commas(spec)) {
    const auto v = detail::parse_double(tok);
    if (!v) throw ConfigError(fmt::format("alpha grid '{}': bad entry '{}'", spec, tok));
    if (!(*v > 0.0 && *v < 1.0)) {
      throw ConfigError(fmt::format("alpha grid '{}': {} is outside (0, 1)", spec, *v));
    }
    if (!out.empty() && !(*v > out.back())) {
      throw ConfigError(fmt::format("alpha grid '{}' must be strictly increasing", spec));
    }
    out.push_back(*v);
  }
  return out;
}

inline FairnessMeasure parse_measure(const std::string& name, std::size_t k) {
  if (name == "maxmin") return FairnessMeasure::max_min();
  if (name == "nash") return FairnessMeasure::nash();
  if (name == "sumkmin") {
    if (k < 1) throw ConfigError("--k must be >= 1 for sumkmin");
    return FairnessMeasure::sum_k_min(k);
  }
  throw ConfigError(fmt::format("unknown measure '{}' (maxmin|nash|sumkmin)", name));
}

inline PriceScope parse_scope(const std::string& s) {
  if (s == "all") return PriceScope::AllUsers;
  if (s == "misest-group") return PriceScope::MisestimatedGroup;
  throw ConfigError(fmt::format("unknown scope '{}' (all|misest-group)", s));
}

inline TieBreak parse_tie_break(const std::string& s) {
  if (s == "solver") return TieBreak::SolverDefault;
  if (s == "canonical") return TieBreak::CanonicalSymmetric;
  throw ConfigError(fmt::format("unknown tie-break '{}' (solver|canonical)", s));
}

inline OptimizerOptions optimizer_options(const ExperimentConfig& c) {
  OptimizerOptions o;
  o.tie_break = parse_tie_break(c.tie_break);
  if (c.lp_tolerance) {
    if (!(*c.lp_tolerance > 0.0 && *c.lp_tolerance < 1e-3)) {
      throw ConfigError("--lp-tolerance must lie in (0, 1e-3)");
    }
    o.lp.feasibility = *c.lp_tolerance;
    o.lp.optimality = *c.lp_tolerance;
  }
  if (c.nash_gap) {
    if (!(*c.nash_gap > 0.0 && *c.nash_gap < 1e-2)) throw ConfigError("--nash-gap must lie in (0, 1e-2)");
    o.nash.gap_tolerance = *c.nash_gap;
  }
  return o;
}

// ---------------------------------------------------------------------------
// Provenance

inline nlohmann::json tolerances_json(const OptimizerOptions& o) {
  return {{"lp_feasibility", o.lp.feasibility},
          {"lp_optimality", o.lp.optimality},
          {"lp_pivot", o.lp.pivot},
          {"nash_gap", o.nash.gap_tolerance},
          {"nash_barrier_target", o.nash.barrier_target},
          {"nash_max_iterations", o.nash.max_iterations},
          {"item_constraint_margin", o.if_margin},
          {"log_constraint_margin", o.log_margin}};
}

// Everything needed to rerun a command. Contains no timestamps or host data,
// so reruns reproduce it byte for byte.
inline nlohmann::json provenance_json(const ExperimentConfig& c, const OptimizerOptions& o,
                                      const std::vector<std::uint64_t>& seeds) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"config", c.echo()},
          {"tolerances", tolerances_json(o)},
          {"seeds", seeds}};
}

inline std::string provenance_comment(const nlohmann::json& prov) {
  return "# provenance: " + prov.dump() + "\n";
}

// ---------------------------------------------------------------------------
// Inputs

struct MatrixInput {
  UtilityMatrix w;
  std::string description;
};

namespace detail {

inline void require_values(const ExperimentConfig& c) {
  if (c.values.empty()) throw ConfigError("--values is required for a generated population");
}

inline MatrixInput generated_matrix(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.population == "two-type") {
    require_values(c);
    if (!c.alpha) throw ConfigError("--alpha is required for the two-type population");
    return {gen_two_type(c.values, *c.alpha, c.users),
            fmt::format("two-type(alpha={}, m={})", format_number(*c.alpha), c.users)};
  }
  if (c.population == "homogeneous") {
    require_values(c);
    return {gen_homogeneous(c.values, c.users), fmt::format("homogeneous(m={})", c.users)};
  }
  if (c.population == "misest") {
    require_values(c);
    return {gen_misestimation(c.values, c.beta, c.users, seed).truth,
            fmt::format("misest-truth(beta={}, m={}, seed={})", format_number(c.beta), c.users,
                        seed)};
  }
  if (c.population == "random") {
    return {gen_random(c.users, c.items, seed),
            fmt::format("random(m={}, n={}, seed={})", c.users, c.items, seed)};
  }
  throw ConfigError(fmt::format("unknown population '{}' (two-type|homogeneous|misest|random)",
                                c.population));
}

inline MatrixInput matrix_input(const ExperimentConfig& c, std::uint64_t seed) {
  if (!c.matrix.empty()) return {load_utility_csv(c.matrix), "file:" + c.matrix};
  return generated_matrix(c, seed);
}

inline std::vector<std::uint64_t> run_seeds(const ExperimentConfig& c) {
  if (c.runs < 1) throw ConfigError("--runs must be >= 1");
  if (c.runs > 1 && !c.matrix.empty()) throw ConfigError("--runs > 1 needs a generated population");
  std::vector<std::uint64_t> s;
  for (std::size_t r = 0; r < c.runs; ++r) s.push_back(c.seed + r);
  return s;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  out.stderr_ = sd / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SVG chart

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

// Static line chart with fixed layout; output depends only on the data.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                                  const std::vector<SvgSeries>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  auto num = [](double v) { return fmt::format("{:.2f}", v); };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H, W, H);
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">{}</text>\n", L, title);
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L,
                   H - B, W - R);
  s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, T,
                   H - B);
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(px(xv)),
                     H - B + 18, format_number(std::round(xv * 1000) / 1000));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", L - 6,
                     num(py(yv) + 4), format_number(std::round(yv * 1000) / 1000));
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                   num((L + W - R) / 2), H - 12, xlabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& se = series[k];
    std::string pts;
    for (std::size_t i = 0; i < se.x.size(); ++i) {
      if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(se.x[i])) + "," + num(py(se.y[i]));
    }
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                     se.color, pts);
    const double ly = T + 20.0 * static_cast<double>(k);
    s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                     W - R + 10, ly, W - R + 30, ly, se.color);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - R + 36, ly + 4, se.label);
  }
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// Commands

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // written, relative to the output directory
  std::string message;             // human summary
};

namespace detail {

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir.empty() ? "." : dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
      throw IoError(fmt::format("cannot create output directory '{}'", dir_.string()));
    }
  }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& text, CommandResult& res) const {
    write_text(path(name), text);
    res.files.push_back(name);
  }

 private:
  std::filesystem::path dir_;
};

inline void write_provenance(const OutputDir& out, nlohmann::json prov, CommandResult& res) {
  std::vector<std::string> files = res.files;
  files.push_back("provenance.json");
  prov["outputs"] = files;
  out.write("provenance.json", prov.dump(2) + "\n", res);
}

inline CommandResult cmd_generate(const ExperimentConfig& c, const OptimizerOptions& o) {
  if (!c.matrix.empty()) throw ConfigError("generate does not take --matrix");
  const OutputDir out(c.out);
  CommandResult res;
  nlohmann::json prov = provenance_json(c, o, {c.seed});
  if (c.population == "misest") {
    require_values(c);
    const auto pop = gen_misestimation(c.values, c.beta, c.users, c.seed);
    out.write("matrix.csv", utility_csv_text(pop.truth), res);
    out.write("estimate.csv", utility_csv_text(pop.estimate), res);
    prov["misestimated_users"] = pop.misestimated;
  } else {
    const auto in = generated_matrix(c, c.seed);
    out.write("matrix.csv", utility_csv_text(in.w), res);
    prov["matrix"] = in.description;
  }
  write_provenance(out, prov, res);
  res.message = fmt::format("wrote {} file(s) to {}", res.files.size(), c.out);
  return res;
}

inline CommandResult cmd_tradeoff(const ExperimentConfig& c, const OptimizerOptions& o) {
  const auto seeds = run_seeds(c);
  const auto gammas = parse_gamma_grid(c.gammas);
  const auto measure = parse_measure(c.measure, c.k);
  const ItemUtilityModel model{c.delta};
  model.validate();
  const OutputDir out(c.out);
  CommandResult res;
  nlohmann::json prov = provenance_json(c, o, seeds);

  std::string csv = provenance_comment(prov);
  std::vector<std::string> header{"gamma", "if_star", "if_target", "uf_achieved",
                                  "if_achieved", "status", "solve_ms"};
  if (seeds.size() > 1) {
    header.push_back("run");
    header.push_back("seed");
  }
  csv += csv_line(header);
  std::vector<std::vector<double>> uf(gammas.size()), ifa(gammas.size());
  std::vector<std::string> inputs;
  std::vector<std::string> failures;
  TradeoffCurve last;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    const auto in = matrix_input(c, seeds[r]);
    inputs.push_back(in.description);
    const FairProblem prob(in.w, model, measure, o);
    last = tradeoff_sweep(prob, gammas, c.parallel);
    for (std::size_t g = 0; g < last.rows.size(); ++g) {
      const auto& row = last.rows[g];
      std::vector<std::string> f{format_number(row.gamma), format_number(row.if_star),
                                 format_number(row.if_target), format_number(row.uf_achieved),
                                 format_number(row.if_achieved), row.status,
                                 fmt::format("{:.3f}", row.solve_ms)};
      if (seeds.size() > 1) {
        f.push_back(std::to_string(r));
        f.push_back(std::to_string(seeds[r]));
      }
      csv += csv_line(f);
      if (row.status != "optimal") {
        failures.push_back(fmt::format("gamma={}: {}", format_number(row.gamma), row.status));
      }
      uf[g].push_back(row.uf_achieved);
      ifa[g].push_back(row.if_achieved);
    }
  }
  out.write("curve.csv", csv, res);

  if (seeds.size() > 1) {
    std::string sum = provenance_comment(prov);
    sum += csv_line({"gamma", "runs", "uf_mean", "uf_stderr", "if_mean", "if_stderr"});
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      const auto u = mean_stderr(uf[g]);
      const auto i = mean_stderr(ifa[g]);
      sum += csv_line({format_number(gammas[g]), std::to_string(seeds.size()),
                       format_number(u.mean), format_number(u.stderr_), format_number(i.mean),
                       format_number(i.stderr_)});
    }
    out.write("curve_summary.csv", sum, res);
  }

  if (!c.svg.empty()) {
    std::vector<double> ufm, ifm;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      ufm.push_back(mean_stderr(uf[g]).mean);
      ifm.push_back(mean_stderr(ifa[g]).mean);
    }
    const std::string svg = svg_line_chart(
        fmt::format("Tradeoff curve ({})", to_string(measure)), "gamma",
        {{"user fairness", "#1f77b4", gammas, ufm}, {"item fairness", "#d62728", gammas, ifm}});
    write_text(c.svg, svg);
    res.files.push_back(c.svg);
  }

  prov["inputs"] = inputs;
  write_provenance(out, prov, res);
  if (!failures.empty()) {
    res.exit_code = kExitSolver;
    res.message = "solver failure: " + failures.front();
  } else {
    res.message = fmt::format("{} gamma point(s) x {} run(s)", gammas.size(), seeds.size());
  }
  return res;
}

inline CommandResult cmd_pof(const ExperimentConfig& c, const OptimizerOptions& o) {
  const auto seeds = run_seeds(c);
  const auto measure = parse_measure(c.measure, c.k);
  const ItemUtilityModel model{c.delta};
  model.validate();
  detail::require_ratio_measure(measure);
  const OutputDir out(c.out);
  CommandResult res;
  nlohmann::json prov = provenance_json(c, o, seeds);
  std::string csv = provenance_comment(prov);
  csv += csv_line({"run", "seed", "uf_star_0", "uf_star_1", "pof"});
  std::vector<double> pofs;
  std::vector<std::string> inputs;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    const auto in = matrix_input(c, seeds[r]);
    inputs.push_back(in.description);
    const FairProblem prob(in.w, model, measure, o);
    const double uf0 = prob.uf_star(0.0).value;
    const double uf1 = prob.uf_star(1.0).value;
    const double pof = (uf0 - uf1) / uf0;
    pofs.push_back(pof);
    csv += csv_line({std::to_string(r), std::to_string(seeds[r]), format_number(uf0),
                     format_number(uf1), format_number(pof)});
  }
  out.write("pof.csv", csv, res);
  if (seeds.size() > 1) {
    const auto ms = mean_stderr(pofs);
    std::string sum = provenance_comment(prov);
    sum += csv_line({"runs", "pof_mean", "pof_stderr"});
    sum += csv_line({std::to_string(seeds.size()), format_number(ms.mean), format_number(ms.stderr_)});
    out.write("pof_summary.csv", sum, res);
  }
  prov["inputs"] = inputs;
  write_provenance(out, prov, res);
  res.message = fmt::format("pof = {}", format_number(mean_stderr(pofs).mean));
  return res;
}

inline CommandResult cmd_misest(const ExperimentConfig& c, const OptimizerOptions& o) {
  const auto gammas = parse_gamma_grid(c.gammas);
  const auto measure = parse_measure(c.measure, c.k);
  const auto scope = parse_scope(c.scope);
  const ItemUtilityModel model{c.delta};
  model.validate();
  detail::require_ratio_measure(measure);
  if (c.runs != 1) throw ConfigError("misest runs a single population; use --seed instead of --runs");

  UtilityMatrix truth, estimate;
  std::string description;
  if (!c.matrix.empty() || !c.estimate.empty()) {
    if (c.matrix.empty() || c.estimate.empty()) {
      throw ConfigError("misest needs both --matrix and --estimate, or a generated population");
    }
    truth = load_utility_csv(c.matrix);
    estimate = load_utility_csv(c.estimate);
    if (truth.users() != estimate.users() || truth.items() != estimate.items()) {
      throw ConfigError("true and estimated matrices differ in shape");
    }
    description = "files:" + c.matrix + "," + c.estimate;
  } else {
    require_values(c);
    auto pop = gen_misestimation(c.values, c.beta, c.users, c.seed);
    truth = std::move(pop.truth);
    estimate = std::move(pop.estimate);
    description = fmt::format("misest(beta={}, m={}, seed={})", format_number(c.beta), c.users, c.seed);
  }

  const OutputDir out(c.out);
  CommandResult res;
  nlohmann::json prov = provenance_json(c, o, {c.seed});
  prov["inputs"] = {description};
  const FairProblem tp(truth, model, measure, o);
  const FairProblem ep(estimate, model, measure, o);
  std::string csv = provenance_comment(prov);
  csv += csv_line({"gamma", "scope", "baseline", "achieved", "pom"});
  std::string summary;
  for (double g : gammas) {
    const auto r = price_of_misestimation(tp, ep, g, scope);
    csv += csv_line({format_number(g), to_string(scope), format_number(r.baseline),
                     format_number(r.achieved), format_number(r.pom)});
    summary += fmt::format("{}pom({})={}", summary.empty() ? "" : " ", format_number(g),
                           format_number(r.pom));
  }
  out.write("misest.csv", csv, res);
  write_provenance(out, prov, res);
  res.message = summary;
  return res;
}

inline void require_two_type_defaults(const ExperimentConfig& c) {
  if (c.measure != "maxmin" || c.delta != 0.0) {
    throw ConfigError("the closed forms cover max-min fairness with delta = 0 only");
  }
  if (!c.matrix.empty()) throw ConfigError("this command builds two-type populations from --values");
  require_values(c);
}

// LP-path two-type values at an exactly representable alpha = count / users.
struct TwoTypeLp {
  double alpha = 0.0;
  double if_star = 0.0;
  double uf1 = 0.0;
  double pof = 0.0;
};

inline TwoTypeLp two_type_lp(const std::vector<double>& v, double alpha, std::size_t users,
                             const OptimizerOptions& o) {
  const auto w = gen_two_type(v, alpha, users);
  const FairProblem prob(w, ItemUtilityModel::symmetric(), FairnessMeasure::max_min(), o);
  TwoTypeLp out;
  out.alpha = static_cast<double>(round_half_up(alpha * static_cast<double>(users))) /
              static_cast<double>(users);
  out.if_star = prob.if_star().value;
  out.uf1 = prob.uf_star(1.0).value;
  const double uf0 = prob.uf_star(0.0).value;
  out.pof = (uf0 - out.uf1) / uf0;
  return out;
}

inline constexpr double kOracleTolerance = 1e-6;

inline CommandResult cmd_validate_closed_form(const ExperimentConfig& c, const OptimizerOptions& o) {
  require_two_type_defaults(c);
  const auto alphas = parse_alpha_grid(c.alphas);
  const OutputDir out(c.out);
  CommandResult res;
  nlohmann::json prov = provenance_json(c, o, {});
  std::string csv = provenance_comment(prov);
  csv += csv_line({"alpha", "pivot_t", "if_star_analytic", "if_star_lp", "if_star_abs_err",
                   "uf1_analytic", "uf1_lp", "uf1_abs_err"});
  double max_if = 0.0, max_uf = 0.0;
  for (double a : alphas) {
    const auto lp = two_type_lp(c.values, a, c.users, o);
    const auto cf = two_type_solution({c.values, lp.alpha});
    const double eif = std::abs(lp.if_star - cf.if_star);
    const double euf = std::abs(lp.uf1 - cf.uf1);
    max_if = std::max(max_if, eif);
    max_uf = std::max(max_uf, euf);
    csv += csv_line({format_number(lp.alpha), std::to_string(cf.t), format_number(cf.if_star),
                     format_number(lp.if_star), format_number(eif), format_number(cf.uf1),
                     format_number(lp.uf1), format_number(euf)});
  }
  out.write("closed_form.csv", csv, res);
  const bool pass = max_if < kOracleTolerance && max_uf < kOracleTolerance;
  nlohmann::json report = {{"alphas", alphas.size()},
                           {"max_if_star_abs_err", max_if},
                           {"max_uf1_abs_err", max_uf},
                           {"tolerance", kOracleTolerance},
                           {"pass", pass},
                           {"provenance", prov}};
  out.write("report.json", report.dump(2) + "\n", res);
  write_provenance(out, prov, res);
  res.message = fmt::format("max |IF*_LP - IF*_analytic| = {:.3g}, max |UF*(1)_LP - uf1| = {:.3g}: {}",
                            max_if, max_uf, pass ? "PASS" : "FAIL");
  if (!pass) res.exit_code = kExitSolver;
  return res;
}

inline CommandResult cmd_sweep_alpha(const ExperimentConfig& c, const OptimizerOptions& o) {
  require_two_type_defaults(c);
  const auto alphas = parse_alpha_grid(c.alphas);
  const OutputDir out(c.out);
  CommandResult res;
  nlohmann::json prov = provenance_json(c, o, {});
  std::string csv = provenance_comment(prov);
  csv += csv_line({"alpha", "pivot_t", "if_star", "uf1", "pof", "pof_lp"});
  std::vector<double> xs, ys;
  for (double a : alphas) {
    const auto lp = two_type_lp(c.values, a, c.users, o);
    const auto cf = two_type_solution({c.values, lp.alpha});
    csv += csv_line({format_number(lp.alpha), std::to_string(cf.t), format_number(cf.if_star),
                     format_number(cf.uf1), format_number(cf.pof), format_number(lp.pof)});
    xs.push_back(lp.alpha);
    ys.push_back(cf.pof);
  }
  out.write("pof_alpha.csv", csv, res);
  if (!c.svg.empty()) {
    write_text(c.svg, svg_line_chart("Price of fairness by type share", "alpha",
                                     {{"price of fairness", "#1f77b4", xs, ys}}));
    res.files.push_back(c.svg);
  }
  write_provenance(out, prov, res);
  res.message = fmt::format("{} alpha point(s)", alphas.size());
  return res;
}

inline std::string error_kind(int code) {
  switch (code) {
    case kExitConfig: return "config_error";
    case kExitSolver: return "solver_failure";
    case kExitIo: return "io_error";
    default: return "ok";
  }
}

// Best effort: the output directory itself may be the problem.
inline void write_error_record(const ExperimentConfig& c, int code, const std::string& message) {
  try {
    std::error_code ec;
    const std::filesystem::path dir = c.out.empty() ? "." : c.out;
    std::filesystem::create_directories(dir, ec);
    const nlohmann::json j = {{"exit_code", code},
                              {"kind", error_kind(code)},
                              {"command", to_string(c.command)},
                              {"message", message},
                              {"tool", kToolName},
                              {"version", kToolVersion}};
    std::ofstream f(dir / "error.json", std::ios::binary | std::ios::trunc);
    if (f) f << j.dump(2) << "\n";
  } catch (...) {
  }
}

}  // namespace detail

// Runs one command. Never throws: failures become exit codes plus an
// error.json record in the output directory.
inline CommandResult run_command(const ExperimentConfig& c) {
  CommandResult res;
  try {
    const OptimizerOptions o = optimizer_options(c);
    switch (c.command) {
      case Command::Generate: res = detail::cmd_generate(c, o); break;
      case Command::Tradeoff: res = detail::cmd_tradeoff(c, o); break;
      case Command::Pof: res = detail::cmd_pof(c, o); break;
      case Command::Misest: res = detail::cmd_misest(c, o); break;
      case Command::ValidateClosedForm: res = detail::cmd_validate_closed_form(c, o); break;
      case Command::SweepAlpha: res = detail::cmd_sweep_alpha(c, o); break;
    }
  } catch (const ConfigError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const IoError& e) {
    res.exit_code = kExitIo;
    res.message = e.what();
  } catch (const SolverError& e) {
    res.exit_code = kExitSolver;
    res.message = e.what();
  } catch (const DomainError& e) {
    res.exit_code = kExitSolver;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = kExitSolver;
    res.message = std::string("unexpected error: ") + e.what();
  }
  if (res.exit_code != kExitOk) detail::write_error_record(c, res.exit_code, res.message);
  return res;
}

}  // namespace fairrec
