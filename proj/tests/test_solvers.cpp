#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "preg/registry.hpp"
#include "preg/solvers.hpp"
#include "test_util.hpp"

using namespace preg;
using namespace preg::solvers;
using testutil::mat;
using testutil::vec;

namespace {

mapping::MappingModel builtin(const char* name) {
  return registry::equation_model(*registry::find(name));
}

SolveOptions with_root(const Vec& root) {
  SolveOptions o;
  o.root = root;
  return o;
}

}  // namespace

TEST_CASE("classical newton hits the singular Jacobian on the diagonal") {
  auto M = builtin("ex1");
  auto rep = classical_newton(M, vec({0.3, 0.3}), with_root(vec({0, 0})));
  CHECK(rep.status == Status::SingularMatrix);
  CHECK(rep.history.size() == 1);
  CHECK(rep.history[0].k == 0);
}

TEST_CASE("classical newton rejection from (t+t^3, t)") {
  auto M = builtin("ex1");
  double t = 1e-5;
  SolveOptions opts = with_root(vec({0, 0}));
  opts.max_iter = 1;
  auto rep = classical_newton(M, vec({t + t * t * t, t}), opts);
  REQUIRE(rep.history.size() == 2);
  Vec x1 = rep.history[1].x;
  Vec expected = vec({-1.0 / t - t, 1.0 / t + t});
  CHECK(std::abs(x1[0] - expected[0]) <= 1e-6 * std::abs(expected[0]));
  CHECK(std::abs(x1[1] - expected[1]) <= 1e-6 * std::abs(expected[1]));
  CHECK(x1.norm() == doctest::Approx(std::sqrt(2.0) * 1e5).epsilon(1e-4));
}

TEST_CASE("classical newton solves affine maps in one step") {
  auto M = mapping::MappingModel(expr::parse_system({"x1 - 1"}, {"x1"}));
  auto rep = classical_newton(M, vec({5.0}), {});
  CHECK(rep.status == Status::Converged);
  CHECK(rep.history.size() == 2);
  CHECK(rep.final_x[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("classical newton requires a square system") {
  CHECK_THROWS_AS(classical_newton(builtin("eq20a_F"), vec({0, 0, 0}), {}),
                  std::invalid_argument);
}

TEST_CASE("p-factor newton on ex1 follows the displayed iterate formula") {
  auto M = builtin("ex1");
  auto chain = pfactor::build_newton_chain(M, vec({0, 0}), vec({1, -1}), 2);
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x0 = rng.ball_point(2, 0.1);
    auto rep = pfactor_newton(M, x0, chain, with_root(vec({0, 0})));
    CHECK(rep.status == Status::Converged);
    CHECK(rep.final_x.norm() <= 1e-10);
    // per-step map: x+ = [[1,1],[x2-1,x1+1]]^{-1} (0, x1 x2)
    for (std::size_t k = 0; k + 1 < rep.history.size(); ++k) {
      Vec x = rep.history[k].x;
      Mat a = mat({{1, 1}, {x[1] - 1, x[0] + 1}});
      Vec expected = a.inverse() * vec({0.0, x[0] * x[1]});
      testutil::check_close(rep.history[k + 1].x, expected, 1e-12);
    }
  }
}

TEST_CASE("p-factor newton: 3-factor run keeps quadratic ratios under 10") {
  auto M = builtin("phi3");
  auto chain = pfactor::build_newton_chain(M, vec({0, 0}), vec({1, 1}), 3);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x0 = rng.ball_point(2, 0.05);
    auto rep = pfactor_newton(M, x0, chain, with_root(vec({0, 0})));
    CHECK(rep.status == Status::Converged);
    auto ra = convergence_ratio(rep, vec({0, 0}));
    CHECK(ra.c <= 10.0);
  }
}

TEST_CASE("p-factor newton reduces to classical newton when the chain is degenerate") {
  auto M = mapping::MappingModel(expr::parse_system({"x1 - 1", "x1 + 2*x2"}, {"x1", "x2"}));
  Vec root = vec({1, -0.5});
  auto chain = pfactor::build_newton_chain(M, root, vec({0.6, -0.8}), 2);
  Vec x0 = vec({4.0, 3.0});
  auto a = pfactor_newton(M, x0, chain, {});
  auto b = classical_newton(M, x0, {});
  // affine: both land on the root after one step
  testutil::check_close(a.history[1].x, root, 1e-14);
  testutil::check_close(b.history[1].x, root, 1e-14);
}

TEST_CASE("iteration matrix at the root equals the chain factor matrix exactly") {
  for (const char* name : {"ex1", "phi3"}) {
    auto M = builtin(name);
    const auto& prob = *registry::find(name);
    auto chain = pfactor::build_newton_chain(M, prob.root, *prob.h, prob.p.value_or(2));
    Mat at_root = chain.iteration_matrix(M, prob.root);
    CHECK((at_root - chain.factor_matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("singular problems: p-factor succeeds where classical newton degrades") {
  for (const char* name : {"ex1", "phi3"}) {
    auto M = builtin(name);
    const auto& prob = *registry::find(name);
    auto chain = pfactor::build_newton_chain(M, prob.root, *prob.h, prob.p.value_or(2));
    Rng rng(404);
    double c_fit = 0.0;
    std::vector<double> all_ratios;
    bool classical_ever_failed = false;
    for (int trial = 0; trial < 20; ++trial) {
      Vec x0 = prob.root + rng.ball_point(M.n(), 0.05);
      auto rep = pfactor_newton(M, x0, chain, with_root(prob.root));
      CHECK(rep.status == Status::Converged);
      auto ra = convergence_ratio(rep, prob.root);
      c_fit = std::max(c_fit, ra.c);
      for (std::size_t k = 0; k + 1 < rep.history.size(); ++k) {
        double e = rep.history[k].dist_to_root;
        if (e >= 1e-8) all_ratios.push_back(rep.history[k + 1].dist_to_root / (e * e));
      }

      SolveOptions copts = with_root(prob.root);
      copts.max_iter = 60;
      auto crep = classical_newton(M, x0, copts);
      if (crep.status == Status::SingularMatrix) classical_ever_failed = true;
      for (std::size_t k = 0; k + 1 < crep.history.size(); ++k)
        if (crep.history[k + 1].dist_to_root > crep.history[k].dist_to_root)
          classical_ever_failed = true;
    }
    // one constant bounds every stabilized step of every run
    CHECK(c_fit > 0.0);
    CHECK(std::isfinite(c_fit));
    for (double r : all_ratios) CHECK(r <= c_fit + 1e-12);
    // and the classical iteration shows its failure mode on these starts
    CHECK(classical_ever_failed);
  }
}

TEST_CASE("convergence_ratio on a synthetic exactly-quadratic sequence") {
  double q = 0.3;
  SolveReport rep;
  rep.root_known = true;
  rep.root = vec({0, 0});
  Vec u = vec({1, 0});
  for (int k = 0; k < 5; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.x = std::pow(q, std::pow(2.0, k)) * u;
    rep.history.push_back(rec);
  }
  rep.final_x = rep.history.back().x;
  auto ra = convergence_ratio(rep, rep.root);
  for (double r : ra.ratios) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ra.c == doctest::Approx(1.0).epsilon(1e-9));

  SolveReport tiny;
  tiny.history.resize(2);
  CHECK_THROWS_AS(convergence_ratio(tiny, vec({0, 0})), std::invalid_argument);
}

TEST_CASE("statuses: divergence and iteration caps are reported") {
  // x^2 + 1 = 0 has no real root; newton wanders without converging
  auto M = mapping::MappingModel(expr::parse_system({"x1^2 + 1"}, {"x1"}));
  SolveOptions opts;
  opts.max_iter = 8;
  auto rep = classical_newton(M, vec({0.7}), opts);
  CHECK((rep.status == Status::MaxIterations || rep.status == Status::Diverged));
  CHECK(static_cast<int>(rep.history.size()) <= opts.max_iter + 1);
}
