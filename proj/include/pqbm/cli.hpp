#pragma once

#include "pqbm/boundary.hpp"
#include "pqbm/conditions.hpp"
#include "pqbm/global.hpp"
#include "pqbm/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pqbm::cli {

using io::json;

enum ExitCode { kOk = 0, kChecksFailed = 1, kSchema = 2, kNumeric = 3 };

struct Overrides {
  std::optional<std::uint64_t> seed, budget;
  std::optional<double> tol;
  std::optional<std::string> method;
  std::optional<std::string> command;  // subcommand the config must match
};

struct Outcome {
  int exit = kOk;
  std::string csv;
  json summary;
};

// Human-readable statement of each checked formula.
inline std::string anchor(const std::string& formula) {
  static const std::map<std::string, std::string> m = {
      {"pq-midpoint", "mu(lK+_p(1-l)L)^(q/n) >= l mu(K)^(q/n) + (1-l) mu(L)^(q/n)"},
      {"pq-concavity", "l -> mu((1-l)K +_p lL)^(q/n) concave"},
      {"gaussian-dilates", "l -> gamma((1-l)K +_p l tK)^(p/n) concave"},
      {"cfm-variance", "Var(|x|^2) <= 2 E|x|^2 under gamma|K"},
      {"grad-v-laplacian", "int_K |grad V|^2 dmu <= int_K Laplacian V dmu"},
      {"local-form", "second variation form <= 0 on even functions"},
      {"uniform-convexity", "(1-p)(1+n)/r^2 + q(1+k2)(1+k1) <= 2k1, or the theta system"},
      {"inclusion-case", "(1-p)(2 sqrt(n(1+k2)(1+k1)) + sqrt(k1))/(2r) + q(1+k2)(1+k1) <= 2k1"},
      {"poincare-general", "(1-p)(C^-2/k1 + n)/r^2 + q(1+k2)(1+C^-2) <= k1 + C^-2"},
      {"poincare-inclusion", "(1-p)(2 sqrt(n(1+k2)(1+C^-2)) + C^-1)/(2r) + q(1+k2)(1+C^-2) <= k1 + C^-2"},
      {"lebesgue-threshold", "p >= 1 - C n^(-0.75)"},
  };
  auto it = m.find(formula);
  return it == m.end() ? formula : it->second;
}

namespace detail {

struct Tally {
  int holds = 0, fails = 0, inconclusive = 0;
  void add(Verdict v) {
    if (v == Verdict::Holds) ++holds;
    else if (v == Verdict::Fails) ++fails;
    else ++inconclusive;
  }
  json to_json() const { return {{"holds", holds}, {"fails", fails}, {"inconclusive", inconclusive}}; }
};

inline std::vector<double> lambdas_of(const json& c, const std::string& where) {
  if (c.contains("lambdas")) return io::get_list(c, "lambdas", where);
  return lambda_grid(c.contains("lambda_points") ? io::get_int(c, "lambda_points", where) : 9);
}

inline EstimateOptions estimate_options(const json& cfg) {
  EstimateOptions o;
  o.budget = cfg.at("budget").get<std::uint64_t>();
  o.seed = cfg.at("seed").get<std::uint64_t>();
  o.method = parse_method(cfg.at("method").get<std::string>());
  return o;
}

// Fills defaults and applies command-line overrides; the result is echoed
// in the summary.
inline json resolve(json cfg, const Overrides& ov) {
  if (!cfg.is_object()) throw io::SchemaError("config must be a JSON object");
  io::only_keys(cfg,
                {"schema_version", "name", "command", "expect_fail", "density", "budget", "seed", "method", "tol", "checks",
                 "body", "cases", "basis_level", "rows", "rows_csv", "sweeps", "lebesgue", "description"},
                "config");
  if (cfg.contains("schema_version") && cfg["schema_version"] != 1) throw io::SchemaError("unsupported schema_version");
  cfg["schema_version"] = 1;
  const std::string cmd = io::get_str(cfg, "command", "config");
  if (ov.command && *ov.command != cmd)
    throw io::SchemaError("config command '" + cmd + "' does not match '" + *ov.command + "'");
  if (!cfg.contains("name")) cfg["name"] = "unnamed";
  if (!cfg.contains("expect_fail")) cfg["expect_fail"] = false;
  if (!cfg["expect_fail"].is_boolean()) throw io::SchemaError("config: 'expect_fail' must be a boolean");
  if (ov.seed) cfg["seed"] = *ov.seed;
  if (ov.budget) cfg["budget"] = *ov.budget;
  if (ov.tol) cfg["tol"] = *ov.tol;
  if (ov.method) cfg["method"] = *ov.method;
  if (!cfg.contains("seed")) cfg["seed"] = 1;
  if (!cfg.contains("budget")) cfg["budget"] = kDefaultBudget;
  if (!cfg.contains("method")) cfg["method"] = "auto";
  if (!cfg.contains("tol")) cfg["tol"] = 1e-8;
  auto nonneg = [](const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); };
  if (!nonneg(cfg["seed"])) throw io::SchemaError("config: 'seed' must be a nonnegative integer");
  if (!nonneg(cfg["budget"])) throw io::SchemaError("config: 'budget' must be a positive integer");
  cfg["seed"] = cfg["seed"].get<std::uint64_t>();
  cfg["budget"] = cfg["budget"].get<std::uint64_t>();
  if (cfg["budget"].get<std::uint64_t>() < kMinBudget) throw io::SchemaError("config: 'budget' must be at least 1000");
  if (!cfg["tol"].is_number() || !(cfg["tol"].get<double>() > 0.0)) throw io::SchemaError("config: 'tol' must be positive");
  if (!cfg["method"].is_string()) throw io::SchemaError("config: 'method' must be a string");
  try {
    parse_method(cfg["method"].get<std::string>());
  } catch (const InputError& e) {
    throw io::SchemaError(std::string("config: ") + e.what());
  }
  return cfg;
}

const std::vector<std::string> kGlobalHeader = {"scenario", "check", "index", "formula", "anchor", "K", "L", "density",
                                                "lambda", "p", "q", "value", "deficit", "stderr", "verdict", "method",
                                                "budget", "seed"};

inline std::string global_row(const std::string& scen, const std::string& check, int idx, const std::string& formula,
                              const std::string& K, const std::string& L, const std::string& dens, double lambda,
                              double p, double q, double value, double deficit, double sd, Verdict v, Method m,
                              std::uint64_t budget, std::uint64_t seed) {
  return io::csv_row({scen, check, std::to_string(idx), formula, anchor(formula), K, L, dens, io::num(lambda),
                      io::num(p), io::num(q), io::num(value), io::num(deficit), io::num(sd), verdict_name(v),
                      method_name(m), std::to_string(budget), std::to_string(seed)});
}

inline Outcome check_global(const json& cfg) {
  Outcome out;
  out.csv = io::csv_row(kGlobalHeader);
  const std::string scen = cfg["name"].get<std::string>();
  const auto& checks = io::field(cfg, "checks", "config");
  if (!checks.is_array() || checks.empty()) throw io::SchemaError("config: 'checks' must be a nonempty array");
  GlobalOptions gopt;
  gopt.est = estimate_options(cfg);
  Tally tally;
  json results = json::array();
  int idx = 0;
  for (const auto& c : checks) {
    const std::string where = "checks[" + std::to_string(idx) + "]";
    const std::string type = io::get_str(c, "type", where);
    if (type == "midpoint") {
      io::only_keys(c, {"type", "K", "L", "lambda", "p", "q", "density", "allow_nonsymmetric"}, where);
      const Body K = io::parse_body(io::field(c, "K", where), where + ".K");
      const Body L = io::parse_body(io::field(c, "L", where), where + ".L");
      const Density mu = io::parse_density(c.contains("density") ? c["density"] : io::field(cfg, "density", "config"),
                                           K.dim(), where + ".density");
      GlobalOptions g = gopt;
      g.allow_nonsymmetric = c.value("allow_nonsymmetric", false);
      const auto r = midpoint_check(K, L, io::get_num(c, "lambda", where, 0.5), io::get_num(c, "p", where),
                                    io::get_num(c, "q", where), mu, g);
      tally.add(r.verdict);
      out.csv += global_row(scen, type, idx, r.formula, r.K, r.L, r.density, r.lambda, r.p, r.q, r.mu_M, r.deficit,
                            r.stderr_, r.verdict, r.method, gopt.est.budget, gopt.est.seed);
      results.push_back({{"check", type}, {"formula", r.formula}, {"K", r.K}, {"L", r.L}, {"density", r.density},
                         {"lambda", r.lambda}, {"p", r.p}, {"q", r.q}, {"mu_K", r.mu_K}, {"mu_L", r.mu_L},
                         {"mu_M", r.mu_M}, {"deficit", r.deficit}, {"stderr", r.stderr_},
                         {"verdict", verdict_name(r.verdict)}, {"method", method_name(r.method)}, {"notes", r.notes}});
    } else if (type == "sweep" || type == "dilates") {
      SweepReport r;
      if (type == "sweep") {
        io::only_keys(c, {"type", "K", "L", "p", "q", "density", "lambdas", "lambda_points"}, where);
        const Body K = io::parse_body(io::field(c, "K", where), where + ".K");
        const Body L = io::parse_body(io::field(c, "L", where), where + ".L");
        const Density mu = io::parse_density(c.contains("density") ? c["density"] : io::field(cfg, "density", "config"),
                                             K.dim(), where + ".density");
        r = concavity_sweep(K, L, io::get_num(c, "p", where), io::get_num(c, "q", where), mu, lambdas_of(c, where), gopt);
      } else {
        io::only_keys(c, {"type", "K", "t", "p", "lambdas", "lambda_points"}, where);
        const Body K = io::parse_body(io::field(c, "K", where), where + ".K");
        DilatesOptions d;
        d.global = gopt;
        r = dilates_check(K, io::get_num(c, "t", where), io::get_num(c, "p", where), lambdas_of(c, where), d);
      }
      json rows = json::array();
      for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        const bool interior = i > 0 && i + 1 < r.rows.size();
        if (interior) tally.add(row.verdict);
        out.csv += global_row(scen, type, idx, r.formula, r.K, r.L, r.density, row.lambda, r.p, r.q, row.phi,
                              interior ? -row.second_diff : 0.0, row.second_diff_stderr, row.verdict, r.method,
                              gopt.est.budget, gopt.est.seed);
        rows.push_back({{"lambda", row.lambda}, {"mu", row.mu}, {"phi", row.phi}, {"phi_stderr", row.phi_stderr},
                        {"second_diff", row.second_diff}, {"second_diff_stderr", row.second_diff_stderr},
                        {"verdict", verdict_name(row.verdict)}});
      }
      results.push_back({{"check", type}, {"formula", r.formula}, {"K", r.K}, {"L", r.L}, {"density", r.density},
                         {"p", r.p}, {"q", r.q}, {"min_margin", r.min_margin}, {"verdict", verdict_name(r.verdict)},
                         {"method", method_name(r.method)}, {"rows", rows}});
    } else if (type == "cfm" || type == "grad_v") {
      io::only_keys(c, {"type", "K", "density"}, where);
      const Body K = io::parse_body(io::field(c, "K", where), where + ".K");
      std::string formula, dens;
      double lhs, rhs, margin, sd;
      Verdict v;
      Method m;
      if (type == "cfm") {
        const auto r = cfm_moment_check(K, gopt.est);
        formula = r.formula;
        dens = Density::gaussian(K.dim()).name();
        lhs = r.lhs, rhs = r.rhs, margin = r.margin, sd = r.stderr_, v = r.verdict, m = r.method;
      } else {
        const Density mu = io::parse_density(c.contains("density") ? c["density"] : io::field(cfg, "density", "config"),
                                             K.dim(), where + ".density");
        const auto r = grad_v_bound_check(K, mu, gopt.est);
        formula = "grad-v-laplacian";
        dens = mu.name();
        lhs = r.lhs, rhs = r.rhs, margin = r.margin, sd = r.stderr_, m = r.method;
        v = classify(margin, sd);
      }
      tally.add(v);
      out.csv += global_row(scen, type, idx, formula, describe(K), "", dens, 0.0, 0.0, 0.0, lhs, margin, sd, v, m,
                            gopt.est.budget, gopt.est.seed);
      results.push_back({{"check", type}, {"formula", formula}, {"K", describe(K)}, {"density", dens}, {"lhs", lhs},
                         {"rhs", rhs}, {"margin", margin}, {"stderr", sd}, {"verdict", verdict_name(v)},
                         {"method", method_name(m)}});
    } else {
      throw io::SchemaError(where + ": unknown check type '" + type + "'");
    }
    ++idx;
  }
  const bool expect_fail = cfg["expect_fail"].get<bool>();
  const bool ok = expect_fail ? tally.fails > 0 : tally.fails == 0;
  out.exit = ok ? kOk : kChecksFailed;
  out.summary["counts"] = tally.to_json();
  out.summary["results"] = results;
  return out;
}

// Labels the eigenmode by its alignment with the support function.
inline std::pair<std::string, double> mode_label(const BoundaryGrid& grid, const Basis& basis, const Vec& c) {
  const Vec v = mode_values(grid, basis, c);
  Vec h(grid.size()), w(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    h[j] = grid.nodes()[j].h;
    w[j] = grid.nodes()[j].ds;
  }
  const double vh = (w.array() * v.array() * h.array()).sum();
  const double vv = (w.array() * v.array() * v.array()).sum();
  const double hh = (w.array() * h.array() * h.array()).sum();
  const double corr = std::abs(vh) / std::sqrt(vv * hh);
  if (corr >= 1.0 - 1e-6) return {"support-function", corr};
  Eigen::Index k = 0;
  c.cwiseAbs().maxCoeff(&k);
  return {"dominant:" + basis.fns[static_cast<std::size_t>(k)].label, corr};
}

inline Outcome check_local(const json& cfg) {
  Outcome out;
  out.csv = io::csv_row({"scenario", "case", "formula", "anchor", "body", "density", "p", "q", "max_eigenvalue", "tol",
                         "verdict", "basis_size", "mode", "mode_support_alignment"});
  const std::string scen = cfg["name"].get<std::string>();
  const SmoothBody body = io::parse_smooth_body(io::field(cfg, "body", "config"), "body");
  const Density mu = io::parse_density(io::field(cfg, "density", "config"), body.n, "density");
  const auto& cases = io::field(cfg, "cases", "config");
  if (!cases.is_array() || cases.empty()) throw io::SchemaError("config: 'cases' must be a nonempty array");
  const double tol = cfg["tol"].get<double>();
  const BoundaryGrid grid = make_boundary_grid(body, mu);
  const Basis basis = default_basis(body.n, cfg.contains("basis_level") ? io::get_int(cfg, "basis_level", "config") : -1);
  Tally tally;
  json results = json::array();
  int idx = 0;
  for (const auto& c : cases) {
    const std::string where = "cases[" + std::to_string(idx) + "]";
    io::only_keys(c, {"p", "q"}, where);
    const double p = io::get_num(c, "p", where), q = io::get_num(c, "q", where);
    auto r = local_form_max(grid, p, q, basis);
    r.tol = tol * r.M.cwiseAbs().maxCoeff();
    r.holds = r.max_eigenvalue <= r.tol;
    const Verdict v = r.holds ? Verdict::Holds : Verdict::Fails;
    tally.add(v);
    const auto [label, corr] = mode_label(grid, basis, r.argmax);
    out.csv += io::csv_row({scen, std::to_string(idx), "local-form", anchor("local-form"), io::describe(body), mu.name(),
                            io::num(p), io::num(q), io::num(r.max_eigenvalue), io::num(r.tol), verdict_name(v),
                            std::to_string(r.basis_size), label, io::num(corr)});
    json coeffs = json::array();
    for (Eigen::Index i = 0; i < r.argmax.size(); ++i) coeffs.push_back(r.argmax[i]);
    results.push_back({{"p", p}, {"q", q}, {"max_eigenvalue", r.max_eigenvalue}, {"tol", r.tol},
                       {"verdict", verdict_name(v)}, {"mode", label}, {"mode_support_alignment", corr},
                       {"argmax", coeffs}});
    ++idx;
  }
  const bool expect_fail = cfg["expect_fail"].get<bool>();
  out.exit = (expect_fail ? tally.fails > 0 : tally.fails == 0) ? kOk : kChecksFailed;
  out.summary["body"] = io::describe(body);
  out.summary["density"] = mu.name();
  out.summary["boundary_nodes"] = grid.size();
  out.summary["counts"] = tally.to_json();
  out.summary["results"] = results;
  return out;
}

const std::vector<std::string> kConditionHeader = {"scenario", "row", "evaluator", "formula", "anchor", "n", "p", "q",
                                                   "r", "R", "k1", "k2", "c_poin", "satisfied", "branch", "slack",
                                                   "out_of_hypothesis", "threshold"};

inline std::string opt_num(const std::optional<double>& v) { return v ? io::num(*v) : ""; }

inline std::string condition_row(const std::string& scen, int row, const std::string& evaluator,
                                 const ConditionInput& in, const ConditionVerdict& v) {
  return io::csv_row({scen, std::to_string(row), evaluator, v.formula, anchor(v.formula), std::to_string(in.n),
                      io::num(in.p), io::num(in.q), io::num(in.r), opt_num(in.R), io::num(in.k1), io::num(in.k2),
                      opt_num(in.c_poin), v.satisfied ? "true" : "false", v.branch, io::num(v.slack),
                      v.out_of_hypothesis ? "true" : "false", ""});
}

inline json verdict_json(const std::string& evaluator, const ConditionVerdict& v) {
  json comps = json::array();
  for (const auto& c : v.components)
    comps.push_back({{"id", c.id}, {"slack", c.slack}, {"applicable", c.applicable}});
  return {{"evaluator", evaluator}, {"formula", v.formula}, {"satisfied", v.satisfied}, {"branch", v.branch},
          {"slack", v.slack}, {"out_of_hypothesis", v.out_of_hypothesis}, {"components", comps}};
}

// CSV with header naming any of n,p,q,r,R,k1,k2,c_poin; empty cells are unset.
inline std::vector<json> read_condition_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io::SchemaError("cannot open rows_csv '" + path + "'");
  std::string line;
  std::vector<std::string> head;
  std::vector<json> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (head.empty()) {
      head = split(line);
      continue;
    }
    const auto cells = split(line);
    json r = json::object();
    for (std::size_t i = 0; i < cells.size() && i < head.size(); ++i) {
      if (cells[i].empty()) continue;
      if (head[i] == "density") {
        r[head[i]] = cells[i];
        continue;
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[i], &used);
        if (used != cells[i].size()) throw std::invalid_argument("trailing");
        if (head[i] == "n") r[head[i]] = static_cast<int>(v);
        else r[head[i]] = v;
      } catch (const std::exception&) {
        throw io::SchemaError("rows_csv: bad number '" + cells[i] + "' in column " + head[i]);
      }
    }
    rows.push_back(r);
  }
  return rows;
}

inline Outcome conditions(const json& cfg, const std::string& base_dir) {
  Outcome out;
  out.csv = io::csv_row(kConditionHeader);
  const std::string scen = cfg["name"].get<std::string>();
  std::vector<json> rows;
  if (cfg.contains("rows")) {
    if (!cfg["rows"].is_array()) throw io::SchemaError("config: 'rows' must be an array");
    for (const auto& r : cfg["rows"]) rows.push_back(r);
  }
  if (cfg.contains("rows_csv")) {
    std::filesystem::path p = io::get_str(cfg, "rows_csv", "config");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    for (auto& r : read_condition_csv(p.string())) rows.push_back(std::move(r));
  }
  json results = json::array();
  int idx = 0;
  for (const auto& rj : rows) {
    const std::string where = "rows[" + std::to_string(idx) + "]";
    const ConditionInput in = io::parse_condition(rj, where);
    json entry = {{"row", idx}, {"verdicts", json::array()}};
    const auto t = theorem_main_check(in);
    out.csv += condition_row(scen, idx, "theorem", in, t);
    entry["verdicts"].push_back(verdict_json("theorem", t));
    const auto pr = prop_main_check(in);
    out.csv += condition_row(scen, idx, "inclusion", in, pr);
    entry["verdicts"].push_back(verdict_json("inclusion", pr));
    if (in.c_poin) {
      const auto g = remark_conditions_check(in);
      out.csv += condition_row(scen, idx, "poincare", in, g);
      entry["verdicts"].push_back(verdict_json("poincare", g));
      const auto gi = remark_inclusion_check(in);
      out.csv += condition_row(scen, idx, "poincare-inclusion", in, gi);
      entry["verdicts"].push_back(verdict_json("poincare-inclusion", gi));
    }
    results.push_back(entry);
    ++idx;
  }
  json sweeps = json::array();
  if (cfg.contains("sweeps")) {
    if (!cfg["sweeps"].is_array()) throw io::SchemaError("config: 'sweeps' must be an array");
    int s = 0;
    for (const auto& sj : cfg["sweeps"]) {
      const std::string where = "sweeps[" + std::to_string(s) + "]";
      const int pts = sj.contains("p_points") ? io::get_int(sj, "p_points", where) : 101;
      if (pts < 2) throw io::SchemaError(where + ": p_points must be at least 2");
      json base = sj;
      base.erase("p_points");
      base["p"] = 0.0;
      ConditionInput in = io::parse_condition(base, where);
      std::optional<double> crossing;
      for (int i = 0; i < pts; ++i) {
        in.p = static_cast<double>(i) / (pts - 1);
        if (in.q > in.p) continue;
        const auto v = theorem_main_check(in);
        out.csv += condition_row(scen, idx, "theorem-sweep", in, v);
        if (v.satisfied && !crossing) crossing = in.p;
        ++idx;
      }
      json sw = {{"n", in.n}, {"q", in.q}, {"r", in.r}, {"k1", in.k1}, {"k2", in.k2}, {"p_points", pts}};
      sw["first_satisfied_p"] = crossing ? json(*crossing) : json(nullptr);
      if (in.k1 == 1.0 && in.k2 == 1.0 && in.q == 0.0)
        sw["predicted_threshold"] = std::max(0.0, gaussian::log_threshold(in.n, in.r));
      sweeps.push_back(sw);
      ++s;
    }
  }
  json leb = json::array();
  if (cfg.contains("lebesgue")) {
    const auto& lj = cfg["lebesgue"];
    io::only_keys(lj, {"C", "n"}, "lebesgue");
    const double C = io::get_num(lj, "C", "lebesgue", kDefaultLebesgueC);
    for (double nd : io::get_list(lj, "n", "lebesgue")) {
      const int n = static_cast<int>(nd);
      if (n != nd) throw io::SchemaError("lebesgue: dimensions must be integers");
      const auto t = lebesgue_threshold(n, C);
      out.csv += io::csv_row({scen, std::to_string(idx), "lebesgue-threshold", "lebesgue-threshold",
                              anchor("lebesgue-threshold"), std::to_string(n), "", "", "", "", "0", "0", "", "", t.label,
                              "", "false", io::num(t.p_star)});
      out.csv += io::csv_row({scen, std::to_string(idx), "lebesgue-prior", "lebesgue-threshold",
                              "p >= 1 - C n^(-1.5)", std::to_string(n), "", "", "", "", "0", "0", "", "", t.label, "",
                              "false", io::num(t.p_prior)});
      leb.push_back({{"n", n}, {"C", C}, {"p_star", t.p_star}, {"p_prior", t.p_prior}, {"label", t.label}});
      ++idx;
    }
  }
  out.summary["results"] = results;
  out.summary["sweeps"] = sweeps;
  out.summary["lebesgue"] = leb;
  return out;
}

}  // namespace detail

// Runs one resolved config. Throws on schema or numeric errors.
inline Outcome execute(const json& raw, const Overrides& ov = {}, const std::string& base_dir = ".") {
  const json cfg = detail::resolve(raw, ov);
  const std::string cmd = cfg["command"].get<std::string>();
  Outcome out;
  if (cmd == "check-global") out = detail::check_global(cfg);
  else if (cmd == "check-local") out = detail::check_local(cfg);
  else if (cmd == "conditions") out = detail::conditions(cfg, base_dir);
  else throw io::SchemaError("config: unknown command '" + cmd + "'");
  json summary = {{"schema_version", io::kSummarySchemaVersion}, {"tool", "pqbm"}, {"command", cmd},
                  {"scenario", cfg["name"]}, {"expect_fail", cfg["expect_fail"]}, {"exit_code", out.exit},
                  {"config", cfg}};
  for (auto it = out.summary.begin(); it != out.summary.end(); ++it) summary[it.key()] = it.value();
  out.summary = std::move(summary);
  return out;
}

// Maps errors to exit codes: 2 for schema/input problems, 3 for numeric failures.
inline int run_file(const std::string& config_path, const Overrides& ov, const std::string& out_dir,
                    std::ostream& out, std::ostream& log) {
  try {
    const json cfg = io::read_json_file(config_path);
    const auto base = std::filesystem::path(config_path).parent_path().string();
    const Outcome o = execute(cfg, ov, base.empty() ? "." : base);
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      io::write_text((std::filesystem::path(out_dir) / "report.csv").string(), o.csv);
      io::write_text((std::filesystem::path(out_dir) / "summary.json").string(), o.summary.dump(2) + "\n");
    } else {
      out << o.csv;
    }
    return o.exit;
  } catch (const NumericError& e) {
    log << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const InputError& e) {
    log << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const DomainError& e) {
    log << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const nlohmann::json::exception& e) {
    log << "schema error: " << e.what() << "\n";
    return kSchema;
  }
}

}  // namespace pqbm::cli
