#include "preg/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "preg/conlag.hpp"
#include "preg/expr.hpp"
#include "preg/optimality.hpp"
#include "preg/registry.hpp"
#include "preg/solvers.hpp"
#include "preg/tangent.hpp"

namespace preg::cli {

namespace {

using report::json;

struct ProblemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric failure that still carries the partial results.
struct NumericError {
  std::string message;
  json partial;
};

struct Options {
  std::string builtin;
  std::string problem_file;
  std::string x0_text;
  std::string h_text;
  int p = 0;  // 0 = problem default
  double tol = 1e-10;
  double rank_tol = linalg::kAutoTol;
  int max_iter = 50;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::string format = "json";
  std::string output;
};

struct Problem {
  registry::BuiltinProblem def;
  double membership_tol = 1e-8;
  std::optional<std::uint64_t> seed;
};

Vec parse_vector(const std::string& text, const char* what) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = text.find(',', start);
    pieces.push_back(text.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  Vec v(static_cast<Eigen::Index>(pieces.size()));
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    try {
      v[i] = expr::parse_constant(pieces[i]);
    } catch (const expr::ParseError& e) {
      throw ProblemError(std::string(what) + ": " + e.what());
    }
  }
  return v;
}

Vec to_vec(const std::vector<double>& vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

Problem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ProblemError("malformed problem file: " + std::string(e.what()));
  }
  Problem prob;
  auto& def = prob.def;
  try {
    def.name = doc.value("name", path);
    def.variables = doc.at("variables").get<std::vector<std::string>>();
    if (doc.contains("equations"))
      def.equations = doc.at("equations").get<std::vector<std::string>>();
    if (doc.contains("objective")) def.objective = doc.at("objective").get<std::string>();
    if (doc.contains("constraints")) {
      for (const auto& c : doc.at("constraints")) {
        std::string e = c.at("expr").get<std::string>();
        std::string sense = c.value("sense", "<=0");
        if (sense == "<=0")
          def.inequalities.push_back(e);
        else if (sense == ">=0")
          def.inequalities.push_back("-(" + e + ")");
        else if (sense == "=0")
          def.equations.push_back(e);
        else
          throw ProblemError("unknown constraint sense '" + sense + "'");
      }
    }
    def.root = to_vec(doc.at("point").get<std::vector<double>>());
    if (doc.contains("h")) def.h = to_vec(doc.at("h").get<std::vector<double>>());
    if (doc.contains("p")) def.p = doc.at("p").get<int>();
    if (doc.contains("seed")) prob.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("tolerances") && doc["tolerances"].contains("membership"))
      prob.membership_tol = doc["tolerances"]["membership"].get<double>();
  } catch (const json::exception& e) {
    throw ProblemError("malformed problem file: " + std::string(e.what()));
  }
  def.kind = !def.inequalities.empty() ? registry::ProblemKind::InequalityConstrainedMin
             : def.objective           ? registry::ProblemKind::EqualityConstrainedMin
                                       : registry::ProblemKind::EquationSystem;
  if (def.equations.empty() && !def.objective)
    throw ProblemError("problem file defines neither equations nor an objective");
  try {
    if (!def.equations.empty()) expr::parse_system(def.equations, def.variables);
    if (def.objective) expr::parse_system({*def.objective}, def.variables);
    if (!def.inequalities.empty()) expr::parse_system(def.inequalities, def.variables);
  } catch (const expr::ParseError& e) {
    throw ProblemError("problem file expression error: " + std::string(e.what()));
  }
  int expected = static_cast<int>(def.variables.size()) +
                 (def.kind == registry::ProblemKind::InequalityConstrainedMin
                      ? static_cast<int>(def.inequalities.size())
                      : 0);
  if (def.root.size() != expected)
    throw ProblemError("problem file point has dimension " + std::to_string(def.root.size()) +
                       ", expected " + std::to_string(expected));
  return prob;
}

Problem load_problem(const Options& opt) {
  if (!opt.builtin.empty() && !opt.problem_file.empty())
    throw ProblemError("use either --builtin or --problem, not both");
  if (!opt.builtin.empty()) {
    const auto* p = registry::find(opt.builtin);
    if (!p) throw ProblemError("unknown built-in problem '" + opt.builtin + "'");
    return {*p, 1e-8, std::nullopt};
  }
  if (!opt.problem_file.empty()) return load_problem_file(opt.problem_file);
  throw ProblemError("no problem given; use --builtin NAME or --problem FILE");
}

json problem_json(const Problem& prob) {
  const auto& def = prob.def;
  json j{{"name", def.name},
         {"kind", def.kind == registry::ProblemKind::EquationSystem ? "equation-system"
                  : def.kind == registry::ProblemKind::EqualityConstrainedMin
                      ? "equality-constrained-min"
                      : "inequality-constrained-min"},
         {"variables", def.variables},
         {"equations", def.equations}};
  if (def.objective) j["objective"] = *def.objective;
  if (!def.inequalities.empty()) j["inequalities"] = def.inequalities;
  j["root"] = report::to_json(def.root);
  if (def.h) j["h"] = report::to_json(*def.h);
  if (def.p) j["p"] = *def.p;
  return j;
}

json config_json(const Options& opt, const Problem& prob) {
  json j{{"seed", opt.seed},
         {"tol", opt.tol},
         {"rank_tol", opt.rank_tol},
         {"membership_tol", prob.membership_tol},
         {"max_iter", opt.max_iter}};
  if (opt.p > 0) j["p"] = opt.p;
  if (!opt.h_text.empty()) j["h"] = opt.h_text;
  if (!opt.x0_text.empty()) j["x0"] = opt.x0_text;
  return j;
}

Vec effective_h(const Options& opt, const Problem& prob, int dim) {
  if (!opt.h_text.empty()) {
    Vec h = parse_vector(opt.h_text, "--h");
    if (h.size() != dim)
      throw ProblemError("--h has dimension " + std::to_string(h.size()) + ", expected " +
                         std::to_string(dim));
    return h;
  }
  if (prob.def.h && prob.def.h->size() == dim) return *prob.def.h;
  throw ProblemError("no direction h available; pass --h");
}

int effective_p(const Options& opt, const Problem& prob, int fallback) {
  if (opt.p > 0) return opt.p;
  if (prob.def.p) return *prob.def.p;
  return fallback;
}

pfactor::Config pf_config(const Options& opt, const Problem& prob, std::uint64_t salt) {
  pfactor::Config cfg;
  cfg.rank_tol = opt.rank_tol;
  cfg.membership_tol = prob.membership_tol;
  cfg.seed = Rng(opt.seed).fork(salt);
  return cfg;
}

pfactor::SampleSpec sample_spec(const Options& opt, const Problem& prob, std::uint64_t salt,
                                int budget = 64) {
  pfactor::SampleSpec spec;
  spec.budget = budget;
  spec.seed = Rng(opt.seed).fork(salt);
  spec.membership_tol = prob.membership_tol;
  return spec;
}

pfactor::Decomposition decompose_or_fail(const mapping::MappingModel& M, const Vec& root,
                                         int p_cap, const pfactor::Config& cfg, json& out) {
  try {
    return pfactor::build_decomposition(M, root, p_cap, cfg);
  } catch (const pfactor::DecompositionIncomplete& e) {
    out["decomposition_error"] = {{"achieved", e.achieved()},
                                  {"ambient", e.ambient()},
                                  {"band_dims", e.band_dims()}};
    throw NumericError{e.what(), out};
  }
}

// ---------------------------------------------------------------------------
// subcommands

json run_analyze(const Options& opt, const Problem& prob) {
  auto M = registry::equation_model(prob.def);
  const Vec& root = prob.def.root;
  if (root.size() != M.n()) throw ProblemError("candidate point dimension mismatch");

  json out;
  double root_residual = M.evaluate(root).norm();
  if (root_residual > 1e-8)
    out["warning"] = "candidate point is not a root: ||F(x*)|| = " + std::to_string(root_residual);

  auto sing = mapping::is_singular_at(M, root, opt.rank_tol);
  out["jacobian"] = report::to_json(M.jacobian(root));
  out["singularity"] = {{"singular", sing.singular},
                        {"rank", sing.rank},
                        {"image", report::to_json(sing.image)}};

  int p_cap = effective_p(opt, prob, std::min(M.max_order(), 4));
  pfactor::Decomposition D = decompose_or_fail(M, root, p_cap, pf_config(opt, prob, 1), out);
  out["decomposition"] = report::to_json(D);

  if (!opt.h_text.empty() || (prob.def.h && prob.def.h->size() == M.n())) {
    Vec h = effective_h(opt, prob, M.n());
    out["factor_operator"] = report::to_json(pfactor::factor_operator(D, h));
    json reg = report::to_json(pfactor::is_p_regular_along(D, h, true));
    reg["h"] = report::to_json(h);
    out["regularity"] = std::move(reg);
  }

  auto cone = pfactor::hp_sample(D, sample_spec(opt, prob, 2));
  json dirs = json::array();
  json regs = json::array();
  for (const auto& h : cone) {
    dirs.push_back(report::to_json(h));
    regs.push_back(pfactor::is_p_regular_along(D, h).regular);
  }
  out["hp"] = {{"count", static_cast<int>(cone.size())},
               {"directions", std::move(dirs)},
               {"regular_along", std::move(regs)}};

  auto strong = pfactor::strong_regularity_estimate(D, 0.1, 4096, Rng(opt.seed).fork(3));
  json sj = report::to_json(strong);
  sj["alpha"] = 0.1;
  out["strong_regularity"] = std::move(sj);
  return out;
}

json run_newton(const Options& opt, const Problem& prob) {
  auto M = registry::equation_model(prob.def);
  if (M.m() != M.n()) throw ProblemError("classical newton needs a square system");
  if (opt.x0_text.empty()) throw ProblemError("newton requires --x0");
  Vec x0 = parse_vector(opt.x0_text, "--x0");
  if (x0.size() != M.n()) throw ProblemError("--x0 dimension mismatch");

  solvers::SolveOptions sopts;
  sopts.tol = opt.tol;
  sopts.max_iter = opt.max_iter;
  sopts.rank_tol = opt.rank_tol;
  if (prob.def.root.size() == M.n()) sopts.root = prob.def.root;

  auto rep = solvers::classical_newton(M, x0, sopts);
  json out{{"solve", report::to_json(rep)}};
  if (rep.status != solvers::Status::Converged)
    throw NumericError{"newton: " + solvers::to_string(rep.status), out};
  return out;
}

json run_pfnewton(const Options& opt, const Problem& prob) {
  auto M = registry::equation_model(prob.def);
  if (M.m() != M.n()) throw ProblemError("the p-factor scheme needs a square system");
  Vec h = effective_h(opt, prob, M.n());
  int p = effective_p(opt, prob, 2);
  const Vec& root = prob.def.root;

  json out;
  pfactor::NewtonChain chain = [&] {
    try {
      return pfactor::build_newton_chain(M, root, h, p, opt.rank_tol);
    } catch (const pfactor::SingularFactorMatrix& e) {
      out["chain_error"] = {{"rank", e.rank()}};
      throw NumericError{e.what(), out};
    }
  }();
  out["chain"] = report::to_json(chain);

  Vec x0 = opt.x0_text.empty() ? root : parse_vector(opt.x0_text, "--x0");
  if (x0.size() != M.n()) throw ProblemError("--x0 dimension mismatch");

  solvers::SolveOptions sopts;
  sopts.tol = opt.tol;
  sopts.max_iter = opt.max_iter;
  sopts.rank_tol = opt.rank_tol;
  sopts.root = root;

  auto rep = solvers::pfactor_newton(M, x0, chain, sopts);
  out["solve"] = report::to_json(rep);
  if (rep.history.size() >= 3) {
    auto ratios = solvers::convergence_ratio(rep, root);
    out["ratios"] = {{"per_step", ratios.ratios}, {"c", ratios.c}};
  }
  if (rep.status != solvers::Status::Converged)
    throw NumericError{"p-factor newton: " + solvers::to_string(rep.status), out};
  return out;
}

json run_optcheck(const Options& opt, const Problem& prob) {
  if (!prob.def.objective) throw ProblemError("optcheck needs an objective");
  auto obj = mapping::MappingModel(expr::parse_system({*prob.def.objective}, prob.def.variables));
  std::optional<mapping::MappingModel> constraint;
  if (!prob.def.equations.empty()) constraint = registry::equation_model(prob.def);

  Vec xstar = prob.def.root.head(obj.n());
  optimality::EqualityProblem P = [&] {
    try {
      return optimality::EqualityProblem(obj, constraint, xstar);
    } catch (const std::invalid_argument& e) {
      throw ProblemError(e.what());
    }
  }();

  json out;
  auto classical = optimality::classical_multiplier_check(P);
  out["classical"] = {{"lambda", report::to_json(classical.lambda)},
                      {"residual", classical.residual},
                      {"holds", classical.residual <= 1e-8}};

  std::optional<pfactor::Decomposition> D;
  if (constraint) {
    int p_cap = effective_p(opt, prob, std::min(constraint->max_order(), 4));
    D = decompose_or_fail(*constraint, xstar, p_cap, pf_config(opt, prob, 1), out);
    out["decomposition"] = report::to_json(*D);
  }

  const pfactor::Decomposition* dp = D ? &*D : nullptr;
  if (!opt.h_text.empty() || (prob.def.h && prob.def.h->size() == obj.n())) {
    Vec h = effective_h(opt, prob, obj.n());
    auto cert = optimality::solve_multiplier(P, dp, h);
    optimality::second_order_check(P, dp, cert);
    out["certificate_at_h"] = report::to_json(cert);
  }
  out["certify"] = report::to_json(optimality::certify(P, dp, sample_spec(opt, prob, 2)));
  return out;
}

json run_conlag(const Options& opt, const Problem& prob) {
  if (!prob.def.objective || prob.def.inequalities.empty())
    throw ProblemError("conlag needs an objective and inequality constraints");
  conlag::ConstrainedProblem P(expr::parse_system({*prob.def.objective}, prob.def.variables),
                               expr::parse_system(prob.def.inequalities, prob.def.variables));
  auto S = conlag::build_system(P);

  if (prob.def.root.size() != S.dim())
    throw ProblemError("candidate must have dimension n+m = " + std::to_string(S.dim()));
  Vec x = prob.def.root.head(S.nx());
  Vec lambda = prob.def.root.tail(S.nconstraints());

  conlag::DirectionInfo info = [&] {
    try {
      return conlag::classify_and_build_h(S, P, x, lambda, prob.membership_tol);
    } catch (const std::invalid_argument& e) {
      throw ProblemError(e.what());
    }
  }();
  S.set_direction(info.h);

  json out{{"G", S.mapping().system().to_strings()},
           {"classification", report::to_json(info)},
           {"G_at_candidate", report::to_json(S.mapping().evaluate(prob.def.root))}};

  auto lemma = conlag::lemma_certificate(S, P, info, 1000, Rng(opt.seed).fork(4), opt.rank_tol);
  out["lemma"] = report::to_json(lemma);

  Vec w0 = opt.x0_text.empty() ? prob.def.root : parse_vector(opt.x0_text, "--x0");
  if (w0.size() != S.dim()) throw ProblemError("--x0 must have dimension n+m");
  solvers::SolveOptions sopts;
  sopts.tol = opt.tol;
  sopts.max_iter = opt.max_iter;
  sopts.rank_tol = opt.rank_tol;
  sopts.root = prob.def.root;
  auto rep = conlag::two_factor_solve(S, w0, sopts);
  out["solve"] = report::to_json(rep);
  Vec lam_limit = rep.final_x.tail(S.nconstraints());
  out["limit_lambda_nonneg"] = lam_limit.minCoeff() >= -1e-8;
  if (rep.status != solvers::Status::Converged)
    throw NumericError{"2-factor method: " + solvers::to_string(rep.status), out};
  return out;
}

json run_tangent(const Options& opt, const Problem& prob) {
  auto M = registry::equation_model(prob.def);
  const Vec& root = prob.def.root;
  if (root.size() != M.n()) throw ProblemError("candidate point dimension mismatch");

  json out;
  int p_cap = effective_p(opt, prob, std::min(M.max_order(), 4));
  pfactor::Decomposition D = decompose_or_fail(M, root, p_cap, pf_config(opt, prob, 1), out);

  auto strong = pfactor::strong_regularity_estimate(D, 0.1, 4096, Rng(opt.seed).fork(3));
  out["strong_regularity"] = report::to_json(strong);
  if (strong.outcome != pfactor::StrongRegularityEstimate::Outcome::Finite)
    out["warning"] = "strong regularity estimate is not finite; theorem hypotheses unverified";

  auto cone = tangent::compute_cone(D, sample_spec(opt, prob, 4));
  out["cone"] = report::to_json(cone);

  json traces = json::array();
  for (const auto& tr : tangent::trace_curves(M, root, cone))
    traces.push_back(report::to_json(tr));
  out["traces"] = std::move(traces);

  tangent::DistanceSpec dspec;
  dspec.seed = Rng(opt.seed).fork(5);
  out["distance"] = report::to_json(tangent::distance_estimate_check(M, D, dspec));
  return out;
}

json run_list() {
  json problems = json::array();
  for (const auto& p : registry::all()) {
    json e{{"name", p.name},
           {"description", p.description},
           {"variables", p.variables},
           {"equations", p.equations}};
    if (p.objective) e["objective"] = *p.objective;
    if (!p.inequalities.empty()) e["inequalities"] = p.inequalities;
    e["root"] = report::to_json(p.root);
    if (p.h) e["h"] = report::to_json(*p.h);
    if (p.p) e["p"] = *p.p;
    problems.push_back(std::move(e));
  }
  return {{"count", static_cast<int>(registry::all().size())}, {"problems", std::move(problems)}};
}

}  // namespace

RunResult run(const std::vector<std::string>& args) {
  CLI::App app{"analysis and solution of singular nonlinear systems"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);

  Options opt;
  if (const char* env = std::getenv("PFACTOR_SEED")) opt.seed = std::strtoull(env, nullptr, 10);

  for (const char* name : {"analyze", "newton", "pfnewton", "optcheck", "conlag", "tangent"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->set_help_flag("--help", "print help and exit");
    sub->add_option("--builtin", opt.builtin, "built-in problem name");
    sub->add_option("--problem", opt.problem_file, "problem file (JSON)");
    sub->add_option("--x0", opt.x0_text, "start point, comma-separated");
    sub->add_option("--h", opt.h_text, "direction h, comma-separated");
    sub->add_option("--p", opt.p, "factor order");
    sub->add_option("--tol", opt.tol, "solver tolerance");
    sub->add_option("--rank-tol", opt.rank_tol, "rank decision tolerance");
    sub->add_option("--max-iter", opt.max_iter, "iteration cap");
    sub->add_option("--seed", opt.seed, "random seed")
        ->each([&opt](const std::string&) { opt.seed_given = true; });
    sub->add_option("--format", opt.format, "json | table | csv")
        ->check(CLI::IsMember({"json", "table", "csv"}));
    sub->add_option("--output", opt.output, "write the report to a file");
  }
  CLI::App* list_cmd = app.add_subcommand("list", "show the built-in problem registry");
  list_cmd->add_option("--format", opt.format, "json | table | csv")
      ->check(CLI::IsMember({"json", "table", "csv"}));
  list_cmd->add_option("--output", opt.output, "write the report to a file");

  std::vector<const char*> argv;
  argv.push_back("pfactor");
  for (const auto& a : args) argv.push_back(a.c_str());

  RunResult result;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help and friends
      result.rendered = app.help();
      return result;
    }
    result.exit_code = kExitUsage;
    result.diagnostic = e.what();
    return result;
  }

  std::string sub = app.get_subcommands().front()->get_name();
  auto t0 = std::chrono::steady_clock::now();

  json rep{{"tool", "pfactor"}, {"subcommand", sub}};
  try {
    if (sub == "list") {
      rep["results"] = run_list();
    } else {
      Problem prob = load_problem(opt);
      if (!opt.seed_given && prob.seed) opt.seed = *prob.seed;
      rep["problem"] = problem_json(prob);
      rep["config"] = config_json(opt, prob);
      if (sub == "analyze") rep["results"] = run_analyze(opt, prob);
      else if (sub == "newton") rep["results"] = run_newton(opt, prob);
      else if (sub == "pfnewton") rep["results"] = run_pfnewton(opt, prob);
      else if (sub == "optcheck") rep["results"] = run_optcheck(opt, prob);
      else if (sub == "conlag") rep["results"] = run_conlag(opt, prob);
      else if (sub == "tangent") rep["results"] = run_tangent(opt, prob);
    }
  } catch (const NumericError& e) {
    rep["results"] = e.partial;
    rep["error"] = e.message;
    result.exit_code = kExitNumeric;
    result.diagnostic = e.message;
  } catch (const ProblemError& e) {
    rep["error"] = e.what();
    result.exit_code = kExitProblem;
    result.diagnostic = e.what();
  } catch (const expr::ParseError& e) {
    rep["error"] = e.what();
    result.exit_code = kExitProblem;
    result.diagnostic = e.what();
  } catch (const std::invalid_argument& e) {
    rep["error"] = e.what();
    result.exit_code = kExitProblem;
    result.diagnostic = e.what();
  } catch (const std::exception& e) {
    rep["error"] = e.what();
    result.exit_code = kExitNumeric;
    result.diagnostic = e.what();
  }

  auto t1 = std::chrono::steady_clock::now();
  rep["timings"] = {
      {"total_ms",
       std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count() / 1000.0}};

  result.report = std::move(rep);
  if (opt.format == "json")
    result.rendered = report::serialize(result.report);
  else if (opt.format == "table")
    result.rendered = report::render_table(result.report);
  else
    result.rendered = report::render_csv(result.report);

  if (!opt.output.empty()) {
    std::ofstream out(opt.output);
    if (!out) {
      result.exit_code = kExitUsage;
      result.diagnostic = "cannot write to '" + opt.output + "'";
    } else {
      out << result.rendered;
      result.rendered.clear();
    }
  }
  return result;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunResult res = run(args);
  if (!res.rendered.empty()) std::cout << res.rendered;
  if (!res.diagnostic.empty()) std::cerr << "pfactor: " << res.diagnostic << "\n";
  return res.exit_code;
}

}  // namespace preg::cli
