#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "preg/conlag.hpp"
#include "test_util.hpp"

using namespace preg;
using namespace preg::conlag;
using testutil::mat;
using testutil::vec;

namespace {

ConstrainedProblem ex9_problem() {
  std::vector<std::string> vars{"x1", "x2"};
  return ConstrainedProblem(expr::parse_system({"x1^2+x2^2+4*x1*x2"}, vars),
                            expr::parse_system({"-x1", "-x2"}, vars));
}

// cofactor expansion along the last two rows, hand oracle for 4x4
double det4(const Mat& m) {
  double d = 0.0;
  int rows[4] = {0, 1, 2, 3};
  std::vector<int> perm(rows, rows + 4);
  // Leibniz over 24 permutations; exact for integer matrices
  std::sort(perm.begin(), perm.end());
  do {
    int sign = 1;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (perm[i] > perm[j]) sign = -sign;
    double prod = 1.0;
    for (int i = 0; i < 4; ++i) prod *= m(i, perm[i]);
    d += sign * prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return d;
}

}  // namespace

TEST_CASE("the assembled system matches the worked display") {
  auto S = build_system(ex9_problem());
  CHECK(S.dim() == 4);
  // G = (2x1+4x2-lam1^2/2, 2x2+4x1-lam2^2/2, -lam1 x1, -lam2 x2)
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Vec w = rng.gaussian_vector(4);
    Vec expected = vec({2 * w[0] + 4 * w[1] - 0.5 * w[2] * w[2],
                        2 * w[1] + 4 * w[0] - 0.5 * w[3] * w[3], -w[2] * w[0], -w[3] * w[1]});
    testutil::check_close(S.mapping().evaluate(w), expected, 1e-14);
  }
  CHECK(S.mapping().evaluate(Vec::Zero(4)).norm() == 0.0);  // KKT point is a root
}

TEST_CASE("the Jacobian of G carries the block structure") {
  // single inactive constraint: bottom-right block D(g(x*)) is full rank
  std::vector<std::string> vars{"x1"};
  ConstrainedProblem P(expr::parse_system({"x1^2"}, vars),
                       expr::parse_system({"x1-1"}, vars));
  auto S = build_system(P);
  Vec w = vec({0.0, 0.0});  // x* = 0, lambda* = 0
  testutil::check_close(S.mapping().evaluate(w), vec({0.0, 0.0}), 0.0);
  Mat j = S.mapping().jacobian(w);
  CHECK(j(1, 1) == doctest::Approx(-1.0));  // D(g(0)) = g(0) = -1
}

TEST_CASE("classification and the scheme direction") {
  auto P = ex9_problem();
  auto S = build_system(P);

  auto info = classify_and_build_h(S, P, vec({0, 0}), vec({0, 0}), 1e-8);
  CHECK(info.s == 2);
  CHECK(info.degenerate);
  CHECK(info.point.weakly_active == std::vector<int>{0, 1});
  testutil::check_close(info.h, vec({0, 0, 1, 1}), 0.0);

  // strict complementarity at the active constraint: nothing weakly active
  auto info2 = classify_and_build_h(S, P, vec({0, 1}), vec({2, 0}), 1e-8);
  CHECK(info2.s == 0);
  CHECK(!info2.degenerate);
  CHECK(info2.point.strongly_active == std::vector<int>{0});

  std::vector<std::string> vars{"x1"};
  ConstrainedProblem strict(expr::parse_system({"(x1-1)^2"}, vars),
                            expr::parse_system({"-x1"}, vars));
  auto Ss = build_system(strict);
  auto info3 = classify_and_build_h(Ss, strict, vec({1.0}), vec({0.0}), 1e-8);
  CHECK(info3.s == 0);
  CHECK(!info3.degenerate);
  CHECK(info3.h.cwiseAbs().maxCoeff() == 0.0);

  // mixed case: lambda = (0, 2), both constraints active
  auto info4 = classify_and_build_h(S, P, vec({0, 0}), vec({0, 2}), 1e-8);
  CHECK(info4.point.weakly_active == std::vector<int>{0});
  CHECK(info4.point.strongly_active == std::vector<int>{1});
  testutil::check_close(info4.h, vec({0, 0, 1, 0}), 0.0);

  CHECK_THROWS_AS(classify_and_build_h(S, P, vec({-1, 0}), vec({0, 0}), 1e-8),
                  std::invalid_argument);
  CHECK_THROWS_AS(classify_and_build_h(S, P, vec({0, 0}), vec({-1, 0}), 1e-8),
                  std::invalid_argument);
}

TEST_CASE("two-factor step vanishes exactly at the solution") {
  auto P = ex9_problem();
  auto S = build_system(P);
  S.set_direction(vec({0, 0, 1, 1}));
  // hand evaluation: the lambda-columns of G'(0) vanish, so G'(0) h = 0
  CHECK(S.phi(Vec::Zero(4)).norm() == 0.0);
  auto rep = two_factor_solve(S, Vec::Zero(4), {});
  CHECK(rep.status == solvers::Status::Converged);
  CHECK(rep.history[1].step_norm <= 1e-14);
}

TEST_CASE("two-factor method converges quadratically on the weakly active problem") {
  auto P = ex9_problem();
  auto S = build_system(P);
  S.set_direction(vec({0, 0, 1, 1}));
  Rng rng(17);
  double beta = 0.0;
  std::vector<double> ratios;
  for (int trial = 0; trial < 20; ++trial) {
    Vec w0 = rng.ball_point(4, 0.1);
    w0[2] = std::abs(w0[2]);
    w0[3] = std::abs(w0[3]);
    solvers::SolveOptions opts;
    opts.root = Vec::Zero(4);
    auto rep = two_factor_solve(S, w0, opts);
    CHECK(rep.status == solvers::Status::Converged);
    CHECK(rep.final_x.norm() <= 1e-10);
    auto ra = solvers::convergence_ratio(rep, Vec::Zero(4));
    beta = std::max(beta, ra.c);
    for (std::size_t k = 0; k + 1 < rep.history.size(); ++k) {
      double e = rep.history[k].dist_to_root;
      if (e >= 1e-8) ratios.push_back(rep.history[k + 1].dist_to_root / (e * e));
    }
  }
  CHECK(std::isfinite(beta));
  CHECK(beta > 0.0);
  for (double r : ratios) CHECK(r <= beta + 1e-12);
}

TEST_CASE("with no weak activity the scheme is classical newton on G") {
  std::vector<std::string> vars{"x1"};
  ConstrainedProblem strict(expr::parse_system({"(x1-1)^2"}, vars),
                            expr::parse_system({"-x1"}, vars));
  auto S = build_system(strict);
  S.set_direction(Vec::Zero(2));
  Vec w0 = vec({0.6, 0.4});
  solvers::SolveOptions opts;
  opts.max_iter = 30;
  auto a = two_factor_solve(S, w0, opts);
  auto b = solvers::classical_newton(S.mapping(), w0, opts);
  std::size_t common = std::min(a.history.size(), b.history.size());
  REQUIRE(common >= 2);
  for (std::size_t k = 0; k < common; ++k)
    testutil::check_close(a.history[k].x, b.history[k].x, 0.0);
}

TEST_CASE("lemma certificate on the worked problem") {
  auto P = ex9_problem();
  auto S = build_system(P);
  auto info = classify_and_build_h(S, P, vec({0, 0}), vec({0, 0}), 1e-8);
  S.set_direction(info.h);
  auto cert = lemma_certificate(S, P, info);

  CHECK(cert.cqc);
  // hand assembly: G'(0) + directional derivative of G' along (0,0,1,1)
  Mat expected = mat({{2, 4, -1, 0}, {4, 2, 0, -1}, {-1, 0, 0, 0}, {0, -1, 0, 0}});
  testutil::check_close(cert.phi_prime, expected, 0.0);
  CHECK(cert.phi_prime_nonsingular);
  CHECK(det4(cert.phi_prime) == doctest::Approx(1.0).epsilon(1e-12));  // Leibniz oracle

  // cone positivity: z^T [[2,4],[4,2]] z = 2z1^2 + 2z2^2 + 8 z1 z2 > 0 on z >= 0
  CHECK(cert.cone_positive);
  CHECK(cert.cone_min_ratio == doctest::Approx(2.0).epsilon(1e-9));  // attained at the rays
  testutil::check_close(cert.V, mat({{2, 4}, {4, 2}}), 0.0);

  // block data assembles to Phi'(w*): here V, Q fill it directly
  testutil::check_close(cert.Q, mat({{-1, 0}, {0, -1}}), 0.0);
  CHECK(cert.Dn.size() == 0);
  Mat assembled(4, 4);
  assembled << cert.V, cert.Q, cert.Q.transpose(), Mat::Zero(2, 2);
  testutil::check_close(assembled, cert.phi_prime, 0.0);
}

TEST_CASE("duplicate constraints break the qualification") {
  std::vector<std::string> vars{"x1", "x2"};
  ConstrainedProblem P(expr::parse_system({"x1^2+x2^2"}, vars),
                       expr::parse_system({"-x1", "-x1"}, vars));
  auto S = build_system(P);
  auto info = classify_and_build_h(S, P, vec({0, 0.5}), vec({0, 0}), 1e-8);
  auto cert = lemma_certificate(S, P, info);
  CHECK(!cert.cqc);
}

TEST_CASE("lambda is not projected during iteration; the sign check is post-hoc") {
  auto P = ex9_problem();
  auto S = build_system(P);
  S.set_direction(vec({0, 0, 1, 1}));
  // a start with one negative multiplier still converges to w* = 0
  Vec w0 = vec({0.05, 0.02, -0.03, 0.04});
  solvers::SolveOptions opts;
  opts.root = Vec::Zero(4);
  auto rep = two_factor_solve(S, w0, opts);
  CHECK(rep.status == solvers::Status::Converged);
  CHECK(rep.final_x.tail(2).minCoeff() >= -1e-8);
}
