#include "eprk/conditions.hpp"
#include "eprk/hamiltonian.hpp"
#include "eprk/integrators.hpp"
#include "eprk/quadrature.hpp"
#include "eprk/trees.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

using namespace eprk;
using nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kInput = 2,
  kMismatch = 3,
  kPrecision = 4,
  kSolver = 5,
};

struct Global {
  unsigned precision = kDefaultPrecisionDigits;
  std::string output;
  // Empty means the command's own default: CSV for conditions and
  // integrate, JSON elsewhere.
  std::string format;

  bool csv() const { return format == "csv"; }
};

struct RuleArgs {
  std::vector<unsigned> s;
  std::vector<std::string> zeta{"0"};
  bool exterior = false;
};

unsigned out_digits(const Global& g) { return g.precision - 5; }

std::string dec(const Global& g, const Real& x) { return to_decimal(x, out_digits(g)); }

json dec_array(const Global& g, const RealVec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(dec(g, x));
  return a;
}

void emit(const Global& g, const std::string& text) {
  if (g.output.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(g.output);
  if (!out) throw InputError("cannot write " + g.output);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

QuadRule make_rule(const Global& g, unsigned s, const std::string& zeta, bool exterior) {
  return quad_rule(s, parse_rational(zeta), g.precision,
                   exterior ? NodePlacement::any_real : NodePlacement::unit_interval);
}

void single(const RuleArgs& r, bool sweep) {
  if (r.s.empty()) throw InputError("--s is required");
  if (!sweep && (r.s.size() > 1 || r.zeta.size() > 1))
    throw InputError("several --s/--zeta values need --sweep");
}

// Tableau document: {"A": [[...]], "b": [...], "c": [...]}, entries as
// decimal or rational strings or plain numbers.
ButcherTableau parse_tableau(const std::string& text, unsigned digits) {
  PrecisionScope ps(digits);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("tableau JSON: ") + e.what());
  }
  auto entry = [](const json& v) -> Real {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s.find('/') != std::string::npos) return to_real(parse_rational(s));
      try {
        return Real(s);
      } catch (const std::exception&) {
        throw InputError("bad tableau entry '" + s + "'");
      }
    }
    if (v.is_number()) return Real(v.get<double>());
    throw InputError("tableau entries must be numbers or strings");
  };
  try {
    ButcherTableau tab;
    tab.precision_digits = digits;
    for (const auto& x : doc.at("b")) tab.b.push_back(entry(x));
    for (const auto& x : doc.at("c")) tab.c.push_back(entry(x));
    const auto& rows = doc.at("A");
    const std::size_t s = tab.b.size();
    if (s == 0 || tab.c.size() != s || rows.size() != s)
      throw InputError("tableau A, b, c sizes disagree");
    tab.A = RealMatrix(s, s);
    for (std::size_t i = 0; i < s; ++i) {
      if (rows[i].size() != s) throw InputError("tableau A must be square");
      for (std::size_t j = 0; j < s; ++j) tab.A(i, j) = entry(rows[i][j]);
    }
    return tab;
  } catch (const json::exception& e) {
    throw InputError(std::string("tableau JSON: ") + e.what());
  }
}

json tableau_json(const Global& g, const ButcherTableau& tab) {
  json doc;
  doc["A"] = json::array();
  for (std::size_t i = 0; i < tab.stages(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < tab.stages(); ++j) row.push_back(dec(g, tab.A(i, j)));
    doc["A"].push_back(row);
  }
  doc["b"] = dec_array(g, tab.b);
  doc["c"] = dec_array(g, tab.c);
  return doc;
}

// ---- quad / tableau ----

int cmd_quad(const Global& g, const RuleArgs& r) {
  single(r, false);
  auto rule = make_rule(g, r.s[0], r.zeta[0], r.exterior);
  if (g.csv()) {
    std::ostringstream out;
    out << "i,c,b\n";
    for (unsigned i = 0; i < rule.s; ++i)
      out << i + 1 << ',' << dec(g, rule.c[i]) << ',' << dec(g, rule.b[i]) << '\n';
    emit(g, out.str());
  } else {
    emit(g, quad_rule_to_json(rule, out_digits(g)));
  }
  return kOk;
}

int cmd_tableau(const Global& g, const RuleArgs& r) {
  single(r, false);
  auto rule = make_rule(g, r.s[0], r.zeta[0], r.exterior);
  auto tab = avf_tableau(rule);
  PrecisionScope ps(g.precision);
  if (g.csv()) {
    std::ostringstream out;
    out << "row";
    for (unsigned j = 0; j < rule.s; ++j) out << ",a" << j + 1;
    out << ",c\n";
    for (unsigned i = 0; i < rule.s; ++i) {
      out << i + 1;
      for (unsigned j = 0; j < rule.s; ++j) out << ',' << dec(g, tab.A(i, j));
      out << ',' << dec(g, tab.c[i]) << '\n';
    }
    out << "b";
    for (unsigned j = 0; j < rule.s; ++j) out << ',' << dec(g, tab.b[j]);
    out << ",\n";
    emit(g, out.str());
  } else {
    json doc = tableau_json(g, tab);
    doc["s"] = rule.s;
    doc["zeta"] = to_string(rule.zeta);
    doc["order"] = rule.order;
    doc["rowsum_defect"] = dec(g, tab.rowsum_defect());
    emit(g, doc.dump(2));
  }
  return kOk;
}

// ---- conditions ----

struct CondRow {
  std::string kind, id;
  unsigned order;
  unsigned branching;
  Real residual;
};

int cmd_conditions(const Global& g, const RuleArgs& r, unsigned m, const std::string& tableau_file) {
  single(r, false);
  if (m < 2 || m > 9) throw InputError("--m must lie in 2..9");
  auto rule = make_rule(g, r.s[0], r.zeta[0], r.exterior);
  PrecisionScope ps(g.precision);
  ButcherTableau tab = avf_tableau(rule);
  if (!tableau_file.empty()) {
    tab = parse_tableau(read_file(tableau_file), g.precision);
    if (tab.stages() != rule.s) throw InputError("tableau stage count differs from --s");
    // Bush residuals use the tableau's own b and c.
    rule.b = tab.b;
    rule.c = tab.c;
  }
  std::vector<CondRow> rows;
  for (const auto& ft : conditions_up_to(m, m))
    rows.push_back({"tree", ft.designated().str(), ft.order, ft.max_branching,
                    energy_condition_residual(ft, tab)});
  for (unsigned p = 1; p + 1 <= m - 1; ++p)
    for (unsigned q = p + 1; q <= m - 1; ++q)
    {
      const auto cls = free_class(RootedTree(std::vector<RootedTree>{double_bush_tree(p, q)}));
      rows.push_back({"double_bush", "t_{" + std::to_string(p) + "," + std::to_string(q) + "}",
                      cls.order, cls.max_branching, double_bush_residual(tab.A, rule, p, q, m)});
    }
  const UniPoly one{1}, x{0, 1};
  if (m >= 3) {
    rows.push_back({"triple_bush", "P=Q=G_1,R=x", 0, 0,
                    triple_bush_residual(tab.A, rule, g_poly(1), g_poly(1), x, m)});
    rows.push_back({"triple_bush", "P=Q=G_2,R=1", 0, 0,
                    triple_bush_residual(tab.A, rule, g_poly(2), g_poly(2), one, m)});
  }
  for (unsigned q = 1; q + 1 <= m; ++q)
    rows.push_back({"asym_bush", "q=" + std::to_string(q), q + 2, 0, asym_bush_residual(tab.A, rule, q, m)});

  if (g.format == "json") {
    json doc;
    doc["s"] = rule.s;
    doc["zeta"] = to_string(rule.zeta);
    doc["m"] = m;
    doc["rows"] = json::array();
    for (const auto& row : rows)
      doc["rows"].push_back({{"kind", row.kind},
                             {"id", row.id},
                             {"order", row.order},
                             {"branching", row.branching},
                             {"residual", dec(g, row.residual)}});
    emit(g, doc.dump(2));
  } else {
    std::ostringstream out;
    out << "kind,id,order,branching,residual\n";
    for (const auto& row : rows)
      out << row.kind << ',' << csv_quote(row.id) << ',' << row.order << ',' << row.branching << ','
          << dec(g, row.residual) << '\n';
    emit(g, out.str());
  }
  return kOk;
}

// ---- rank / uniqueness ----

struct Job {
  unsigned s;
  std::string zeta;
};

struct JobResult {
  json report;
  int code = kOk;
  std::string message;
};

std::vector<Job> jobs_of(const RuleArgs& r) {
  std::vector<Job> jobs;
  for (unsigned s : r.s)
    for (const auto& z : r.zeta) jobs.push_back({s, z});
  return jobs;
}

// Runs jobs concurrently. Every job uses the process-wide precision set in
// main, so no thread changes it.
template <class F>
std::vector<JobResult> run_jobs(const std::vector<Job>& jobs, F&& fn) {
  std::vector<std::future<JobResult>> futures;
  for (const auto& j : jobs)
    futures.push_back(std::async(std::launch::async, [&fn, j]() -> JobResult {
      try {
        return fn(j);
      } catch (const PrecisionError& e) {
        return {json{{"s", j.s}, {"zeta", j.zeta}, {"error", e.what()}}, kPrecision, e.what()};
      } catch (const InputError& e) {
        return {json{{"s", j.s}, {"zeta", j.zeta}, {"error", e.what()}}, kInput, e.what()};
      } catch (const QuadratureError& e) {
        return {json{{"s", j.s}, {"zeta", j.zeta}, {"error", e.what()}}, kInput, e.what()};
      }
    }));
  std::vector<JobResult> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

int finish_jobs(const Global& g, const std::vector<Job>& jobs, std::vector<JobResult> results,
                bool sweep) {
  int code = kOk;
  for (const auto& r : results) {
    if (!r.message.empty()) std::cerr << "eprk: " << r.message << '\n';
    // Input errors dominate, then precision, then mismatches.
    auto rank_of = [](int c) { return c == kInput ? 3 : c == kPrecision ? 2 : c == kMismatch ? 1 : 0; };
    if (rank_of(r.code) > rank_of(code)) code = r.code;
  }
  if (!sweep) {
    emit(g, results[0].report.dump(2));
    return code;
  }
  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (jobs[a].s != jobs[b].s) return jobs[a].s < jobs[b].s;
    return parse_rational(jobs[a].zeta) < parse_rational(jobs[b].zeta);
  });
  json all = json::array();
  for (auto i : order) all.push_back(results[i].report);
  emit(g, all.dump(2));
  return code;
}

JobResult rank_job(const Global& g, const Job& j, std::optional<unsigned> m_opt, bool even,
                   std::optional<std::string> tol_text, bool exterior) {
  auto rule = make_rule(g, j.s, j.zeta, exterior);
  const unsigned m = m_opt ? *m_opt : (even ? 2 * j.s : 2 * j.s - 1);
  if (m != 2 * j.s && m != 2 * j.s - 1) throw InputError("--m must be 2s or 2s-1");
  auto M = build_M(rule, m);
  std::optional<Real> tol;
  if (tol_text) tol = Real(*tol_text);
  auto K = rank_kernel(M, tol);
  auto want = expected_rank(j.s, rule.zeta, m);

  JobResult res;
  json& doc = res.report;
  doc["s"] = j.s;
  doc["zeta"] = to_string(rule.zeta);
  doc["m"] = m;
  doc["kind"] = M.kind == BasisKind::even ? "even" : "odd";
  doc["rank"] = K.rank;
  doc["kernel_dim"] = K.kernel_dim;
  doc["expected_rank"] = want ? json(*want) : json(nullptr);
  doc["expected_kernel_dim"] = want ? json(j.s * j.s - *want) : json(nullptr);
  doc["ambiguous"] = K.ambiguous;
  doc["tolerance"] = dec(g, K.tolerance);
  doc["precision"] = g.precision;
  json checks = json::array();
  for (const auto& c : K.checks) checks.push_back({{"name", c.name}, {"ok", c.ok}, {"value", dec(g, c.value)}});
  doc["checks"] = checks;
  json structured = json::array();
  for (const auto& e : K.structured) {
    json item{{"label", e.label}};
    if (!e.u.empty()) {
      item["u"] = dec_array(g, e.u);
      item["v"] = dec_array(g, e.v);
    }
    json mat = json::array();
    for (std::size_t i = 0; i < e.matrix.rows(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < e.matrix.cols(); ++j) row.push_back(dec(g, e.matrix(i, j)));
      mat.push_back(row);
    }
    item["matrix"] = mat;
    structured.push_back(item);
  }
  doc["structured_kernel"] = structured;

  if (K.ambiguous) {
    res.code = kPrecision;
    res.message = "rank decision is ambiguous at " + std::to_string(g.precision) +
                  " digits for s=" + std::to_string(j.s) + ", zeta=" + j.zeta +
                  "; rerun with a higher --precision";
    doc["verdict"] = "ambiguous";
  } else if (!want) {
    doc["verdict"] = "no expectation";
  } else if (K.rank == *want && K.all_checks_pass()) {
    doc["verdict"] = "match";
  } else {
    doc["verdict"] = "mismatch";
    res.code = kMismatch;
  }
  return res;
}

JobResult uniqueness_job(const Global& g, const Job& j, std::optional<unsigned> m_opt,
                         const std::vector<std::string>& beta_text, bool exterior) {
  auto rule = make_rule(g, j.s, j.zeta, exterior);
  const unsigned m = m_opt ? *m_opt : 2 * j.s - 1;
  if (m != 2 * j.s && m != 2 * j.s - 1) throw InputError("--m must be 2s or 2s-1");
  RealVec betas;
  if (beta_text.empty()) {
    betas = default_betas();
  } else {
    for (const auto& b : beta_text) betas.push_back(to_real(parse_rational(b)));
  }
  auto rep = uniqueness_sweep(rule, m, betas);
  JobResult res;
  json& doc = res.report;
  doc["s"] = j.s;
  doc["zeta"] = to_string(rule.zeta);
  doc["m"] = m;
  doc["linear_uniqueness"] = rep.linear_uniqueness;
  doc["perturbation"] = rep.perturbation;
  doc["perturbation_alignment"] = dec(g, rep.perturbation_alignment);
  json probes = json::array();
  for (const auto& p : rep.probes) {
    json pts = json::array();
    for (const auto& pt : p.points) pts.push_back({{"beta", dec(g, pt.beta)}, {"residual", dec(g, pt.residual)}});
    probes.push_back({{"name", p.name},
                      {"expected_exponent", p.expected_exponent},
                      {"expected_coeff", dec(g, p.expected_coeff)},
                      {"slope", dec(g, p.slope)},
                      {"coeff", dec(g, p.coeff)},
                      {"coeff_rel_error", dec(g, p.coeff_rel_error)},
                      {"ok", p.ok},
                      {"points", pts}});
  }
  doc["probes"] = probes;
  if (!rep.probes.empty()) {
    const auto& p = rep.probes.front();
    doc["residual_fit"] = {{"slope", dec(g, p.slope)},
                           {"coeff", dec(g, p.coeff)},
                           {"expected_coeff", dec(g, p.expected_coeff)}};
  }
  doc["ok"] = rep.ok;
  if (!rep.ok) res.code = kMismatch;
  return res;
}

std::string uniqueness_csv(const Global& g, const std::vector<JobResult>& results) {
  std::ostringstream out;
  out << "s,zeta,probe,beta,residual\n";
  for (const auto& r : results) {
    if (!r.report.contains("probes")) continue;
    for (const auto& p : r.report["probes"])
      for (const auto& pt : p["points"])
        out << r.report["s"].get<unsigned>() << ',' << r.report["zeta"].get<std::string>() << ','
            << csv_quote(p["name"].get<std::string>()) << ',' << pt["beta"].get<std::string>() << ','
            << pt["residual"].get<std::string>() << '\n';
  }
  (void)g;
  return out.str();
}

// ---- integrate / order ----

struct IntegrateArgs {
  std::string hamiltonian;
  std::string method = "avf";
  unsigned s = 2;
  std::string zeta = "0";
  std::string tableau;
  double h = 0.1;
  unsigned steps = 100;
  std::vector<double> y0;
  double tol = 1e-14;
  unsigned max_iter = 100;
  std::string summary;
  double t_end = 1.0;
  std::vector<double> hs{0.1, 0.05, 0.025, 0.0125};
};

Method method_of(const Global& g, const IntegrateArgs& a) {
  if (a.method == "avf") return Method::avf();
  if (a.method == "midpoint") return Method::midpoint();
  if (a.method == "euler") return Method::explicit_euler();
  if (a.method == "rk") {
    if (!a.tableau.empty()) return Method::rk(parse_tableau(read_file(a.tableau), g.precision), "rk");
    return Method::rk(avf_tableau(quad_rule(a.s, parse_rational(a.zeta), g.precision)),
                      "rk(s=" + std::to_string(a.s) + ",zeta=" + a.zeta + ")");
  }
  throw InputError("unknown method '" + a.method + "'");
}

SolverConfig solver_of(const IntegrateArgs& a) {
  SolverConfig cfg;
  cfg.tolerance = a.tol;
  cfg.max_iterations = a.max_iter;
  cfg.validate();
  return cfg;
}

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

int cmd_integrate(const Global& g, const IntegrateArgs& a) {
  auto sys = parse_hamiltonian_json(read_file(a.hamiltonian));
  if (a.y0.size() != sys.dim())
    throw InputError("--y0 needs " + std::to_string(sys.dim()) + " values");
  const Method method = method_of(g, a);
  const auto run = integrate(sys, method, a.y0, a.h, a.steps, solver_of(a));

  unsigned total = 0, newton = 0;
  for (std::size_t k = 0; k < run.iterations.size(); ++k) {
    total += run.iterations[k];
    newton += run.newton_iterations[k];
  }
  json summary{{"method", method.name},
               {"h", a.h},
               {"steps", a.steps},
               {"tolerance", a.tol},
               {"max_drift", run.max_drift()},
               {"drift_slope", run.drift_slope()},
               {"total_iterations", total},
               {"newton_iterations", newton},
               {"final_state", run.states.back()}};

  if (g.format == "json") {
    json doc = summary;
    doc["t"] = run.times;
    doc["y"] = run.states;
    doc["H"] = run.energies;
    doc["newton_iters"] = run.newton_iterations;
    emit(g, doc.dump(2));
  } else {
    std::ostringstream out;
    out << "t";
    for (unsigned i = 0; i < sys.dim(); ++i) out << ",y_" << i + 1;
    out << ",H,newton_iters\n";
    for (std::size_t k = 0; k < run.times.size(); ++k) {
      out << fmt(run.times[k]);
      for (double v : run.states[k]) out << ',' << fmt(v);
      out << ',' << fmt(run.energies[k]) << ',' << run.newton_iterations[k] << '\n';
    }
    emit(g, out.str());
    if (a.summary.empty()) {
      std::cerr << summary.dump(2) << '\n';
    } else {
      std::ofstream s(a.summary);
      if (!s) throw InputError("cannot write " + a.summary);
      s << summary.dump(2) << '\n';
    }
  }
  return kOk;
}

int cmd_order(const Global& g, const IntegrateArgs& a) {
  auto sys = parse_hamiltonian_json(read_file(a.hamiltonian));
  if (a.y0.size() != sys.dim())
    throw InputError("--y0 needs " + std::to_string(sys.dim()) + " values");
  const Method method = method_of(g, a);
  auto fit = convergence_order(sys, method, a.y0, a.t_end, a.hs, solver_of(a));
  json doc{{"method", method.name},
           {"t_end", a.t_end},
           {"step_sizes", fit.step_sizes},
           {"errors", fit.errors},
           {"slope", fit.slope}};
  if (g.csv()) {
    std::ostringstream out;
    out << "h,error\n";
    for (std::size_t k = 0; k < fit.step_sizes.size(); ++k)
      out << fmt(fit.step_sizes[k]) << ',' << fmt(fit.errors[k]) << '\n';
    out << "slope," << fmt(fit.slope) << '\n';
    emit(g, out.str());
  } else {
    emit(g, doc.dump(2));
  }
  return kOk;
}

void add_rule_options(CLI::App* cmd, RuleArgs& r, bool multi) {
  if (multi) {
    cmd->add_option("--s", r.s, "stage count(s)")->required()->check(CLI::Range(1u, 12u));
    cmd->add_option("--zeta", r.zeta, "quadrature parameter(s), decimal or n/d");
  } else {
    cmd->add_option("--s", r.s, "stage count")->required()->expected(1)->check(CLI::Range(1u, 12u));
    cmd->add_option("--zeta", r.zeta, "quadrature parameter, decimal or n/d")->expected(1);
  }
  cmd->add_flag("--allow-exterior", r.exterior, "accept nodes outside [0, 1]");
}

void add_integrate_options(CLI::App* cmd, IntegrateArgs& a) {
  // --h is the step size here, so -h cannot mean help.
  cmd->set_help_flag("--help", "print this help message and exit");
  cmd->add_option("--hamiltonian", a.hamiltonian, "Hamiltonian JSON file")->required();
  cmd->add_option("--method", a.method, "avf, rk, midpoint or euler")
      ->check(CLI::IsMember({"avf", "rk", "midpoint", "euler"}));
  cmd->add_option("--s", a.s, "stages of the rk tableau A = c b^T");
  cmd->add_option("--zeta", a.zeta, "quadrature parameter of the rk tableau");
  cmd->add_option("--tableau", a.tableau, "tableau JSON file for --method rk");
  cmd->add_option("--y0", a.y0, "initial state q_1..q_d,p_1..p_d")->required()->delimiter(',');
  cmd->add_option("--tol", a.tol, "solver tolerance");
  cmd->add_option("--max-iter", a.max_iter, "solver iteration limit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-preserving Runge-Kutta toolkit"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--precision", g.precision, "working precision in decimal digits")
      ->check(CLI::Range(10u, 2000u));
  app.add_option("--output", g.output, "write the result here instead of stdout");
  app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  RuleArgs quad_args, tab_args, cond_args, rank_args, uniq_args;
  auto* quad = app.add_subcommand("quad", "quadrature rule for P_s - zeta P_{s-1}");
  add_rule_options(quad, quad_args, false);

  auto* tableau = app.add_subcommand("tableau", "AVF Butcher tableau A = c b^T");
  add_rule_options(tableau, tab_args, false);

  auto* conditions = app.add_subcommand("conditions", "energy-condition residuals of a tableau");
  add_rule_options(conditions, cond_args, false);
  unsigned cond_m = 4;
  std::string cond_tableau;
  conditions->add_option("--m", cond_m, "Hamiltonian degree")->required();
  conditions->add_option("--tableau", cond_tableau, "tableau JSON file (default AVF)");

  auto* rank = app.add_subcommand("rank", "rank and kernel of the double bush operator");
  add_rule_options(rank, rank_args, true);
  std::optional<unsigned> rank_m;
  std::optional<std::string> rank_tol;
  bool rank_sweep = false, rank_even = false;
  rank->add_option("--m", rank_m, "2s or 2s-1 (default 2s-1)");
  rank->add_option("--tol", rank_tol, "relative pivot threshold");
  rank->add_flag("--even", rank_even, "use m = 2s when --m is absent");
  rank->add_flag("--sweep", rank_sweep, "run all (s, zeta) combinations in parallel");

  auto* uniq = app.add_subcommand("uniqueness", "beta sweep of the nonlinear obstructions");
  add_rule_options(uniq, uniq_args, true);
  std::optional<unsigned> uniq_m;
  std::vector<std::string> betas;
  bool uniq_sweep = false;
  uniq->add_option("--m", uniq_m, "2s or 2s-1 (default 2s-1)");
  uniq->add_option("--betas", betas, "perturbation sizes")->delimiter(',');
  uniq->add_flag("--sweep", uniq_sweep, "run all (s, zeta) combinations in parallel");

  IntegrateArgs int_args, ord_args;
  auto* integ = app.add_subcommand("integrate", "time stepping with energy tracking");
  add_integrate_options(integ, int_args);
  integ->add_option("--h", int_args.h, "step size (negative runs backwards)");
  integ->add_option("--steps", int_args.steps, "number of steps")->check(CLI::PositiveNumber);
  integ->add_option("--summary", int_args.summary, "write the JSON summary here (default stderr)");

  auto* order = app.add_subcommand("order", "convergence order fit");
  add_integrate_options(order, ord_args);
  order->add_option("--t-end", ord_args.t_end, "final time");
  order->add_option("--h", ord_args.hs, "step sizes")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  Real::default_precision(g.precision);
  try {
    if (*quad) return cmd_quad(g, quad_args);
    if (*tableau) return cmd_tableau(g, tab_args);
    if (*conditions) return cmd_conditions(g, cond_args, cond_m, cond_tableau);
    if (*rank || *uniq) {
      if (g.precision < 30) {
        std::cerr << "eprk: rank and kernel computations need --precision >= 30\n";
        return kPrecision;
      }
      const bool sweep = *rank ? rank_sweep : uniq_sweep;
      const RuleArgs& r = *rank ? rank_args : uniq_args;
      single(r, sweep);
      auto jobs = jobs_of(r);
      std::vector<JobResult> results;
      if (*rank) {
        results = run_jobs(jobs, [&](const Job& j) {
          return rank_job(g, j, rank_m, rank_even, rank_tol, r.exterior);
        });
      } else {
        results = run_jobs(jobs, [&](const Job& j) {
          return uniqueness_job(g, j, uniq_m, betas, r.exterior);
        });
        if (g.csv()) {
          Global gcsv = g;
          emit(gcsv, uniqueness_csv(g, results));
          int code = kOk;
          for (const auto& res : results) {
            if (!res.message.empty()) std::cerr << "eprk: " << res.message << '\n';
            code = std::max(code, res.code);
          }
          return code;
        }
      }
      return finish_jobs(g, jobs, std::move(results), sweep);
    }
    if (*integ) return cmd_integrate(g, int_args);
    if (*order) return cmd_order(g, ord_args);
  } catch (const SolverError& e) {
    std::cerr << "eprk: " << e.what();
    if (e.step_index >= 0) std::cerr << " at step " << e.step_index;
    std::cerr << " (residual " << e.residual << ")\n";
    return kSolver;
  } catch (const PrecisionError& e) {
    std::cerr << "eprk: " << e.what() << "; rerun with a higher --precision\n";
    return kPrecision;
  } catch (const InputError& e) {
    std::cerr << "eprk: " << e.what() << '\n';
    return kInput;
  } catch (const QuadratureError& e) {
    std::cerr << "eprk: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "eprk: internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
