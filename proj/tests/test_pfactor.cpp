#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "preg/pfactor.hpp"
#include "preg/registry.hpp"
#include "test_util.hpp"

using namespace preg;
using namespace preg::pfactor;
using testutil::mat;
using testutil::vec;

namespace {

mapping::MappingModel builtin(const char* name) {
  return registry::equation_model(*registry::find(name));
}

Decomposition decompose(const char* name, int p_cap, std::uint64_t seed = 42) {
  Config cfg;
  cfg.seed = seed;
  auto M = builtin(name);
  return build_decomposition(M, Vec::Zero(M.n()), p_cap, cfg);
}

}  // namespace

TEST_CASE("decomposition of ex1: two one-dimensional bands") {
  auto D = decompose("ex1", 2);
  CHECK(D.p() == 2);
  CHECK(D.band(1).dim() == 1);
  CHECK(D.band(2).dim() == 1);
  CHECK(testutil::span_gap(D.band(1).basis(), mat({{1}, {0}})) <= 1e-14);
  CHECK(testutil::span_gap(D.band(2).basis(), mat({{0}, {1}})) <= 1e-14);
}

TEST_CASE("decomposition of the fully degenerate quadric pair") {
  auto D = decompose("eq20a_F", 2);
  CHECK(D.p() == 2);
  CHECK(D.band(1).dim() == 0);  // F'(0) = 0
  CHECK(D.band(2).dim() == 2);  // the quadratic image spans R^2
  testutil::check_close(D.band_projector(2), Mat::Identity(2, 2), 1e-14);
}

TEST_CASE("regular system decomposes at order one") {
  auto M = mapping::MappingModel(expr::parse_system({"x1", "x2"}, {"x1", "x2"}));
  auto D = build_decomposition(M, vec({0, 0}), 2);
  CHECK(D.p() == 1);
  CHECK(D.band(1).dim() == 2);
}

TEST_CASE("incomplete decomposition reports the achieved bands") {
  auto M = mapping::MappingModel(expr::parse_system({"x1", "0"}, {"x1"}));
  try {
    build_decomposition(M, vec({0.0}), 3);
    FAIL("expected DecompositionIncomplete");
  } catch (const DecompositionIncomplete& e) {
    CHECK(e.achieved() == 1);
    CHECK(e.ambient() == 2);
  }
}

TEST_CASE("factor operator on ex1") {
  auto D = decompose("ex1", 2);
  auto good = factor_operator(D, vec({1, -1}));
  testutil::check_close(good.psi, mat({{1, 1}, {-1, 1}}), 1e-14);
  CHECK(good.surjective);
  CHECK(good.rank == 2);

  auto bad = factor_operator(D, vec({1, 1}));
  testutil::check_close(bad.psi, mat({{1, 1}, {1, 1}}), 1e-14);
  CHECK(!bad.surjective);
  CHECK(bad.rank == 1);

  CHECK_THROWS_AS(factor_operator(D, vec({0, 0})), std::invalid_argument);
}

TEST_CASE("factor operator on the quadric pair along (1,1,0)") {
  auto D = decompose("eq20a_F", 2);
  auto fo = factor_operator(D, vec({1, 1, 0}));
  CHECK(fo.rank == 2);
  CHECK(fo.surjective);
}

TEST_CASE("p-regularity along h with the kernel-restriction crosscheck") {
  auto D = decompose("ex1", 2);
  CHECK(is_p_regular_along(D, vec({1, -1})).regular);
  CHECK(!is_p_regular_along(D, vec({1, 1})).regular);

  auto D2 = decompose("eq20a_F", 2);
  CHECK(is_p_regular_along(D2, vec({1, 1, 0})).regular);

  // the two formulations agree wherever we can sample
  Rng rng(77);
  for (const char* name : {"ex1", "reddien", "eq20a_F", "planar", "phi3"}) {
    auto D3 = decompose(name, registry::find(name)->p.value_or(2));
    for (int trial = 0; trial < 25; ++trial) {
      auto rc = is_p_regular_along(D3, rng.unit_vector(D3.n()), true);
      CHECK(rc.crosscheck_ran);
      CHECK(rc.agrees);
    }
  }
}

TEST_CASE("kernel membership on the quadric pair") {
  auto D = decompose("eq20a_F", 2);
  double c = 1.0 / std::sqrt(2.0);
  CHECK(hp_membership(D, vec({c, -c, 0})));
  CHECK(hp_membership(D, vec({c, c, 0})));
  CHECK(!hp_membership(D, vec({0, 0, 1})));  // F''[h]^2 = (2,2) by hand
  CHECK_THROWS_AS(hp_membership(D, vec({0, 0, 0})), std::invalid_argument);
}

TEST_CASE("membership is scale invariant") {
  auto D = decompose("eq20a_F", 2);
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    Vec h = rng.unit_vector(3);
    for (double c : {1e-6, 0.3, 7.0, 1e5}) {
      CHECK(hp_membership(D, h) == hp_membership(D, Vec(c * h)));
      CHECK(hp_membership(D, h) == hp_membership(D, Vec(-c * h)));
    }
  }
  // the four tangent directions stay members under scaling
  CHECK(hp_membership(D, vec({5, 5, 0})));
  CHECK(hp_membership(D, vec({-3e-4, 3e-4, 0})));
}

TEST_CASE("hp_sample finds the kernel lines and nothing else") {
  SampleSpec spec;
  spec.seed = 42;

  auto D = decompose("eq20a_F", 2);
  auto dirs = hp_sample(D, spec);
  REQUIRE(dirs.size() == 4);
  std::vector<Vec> expected{vec({1, 1, 0}).normalized(), vec({1, -1, 0}).normalized(),
                            vec({-1, 1, 0}).normalized(), vec({-1, -1, 0}).normalized()};
  for (const auto& e : expected) {
    double best = 1e9;
    for (const auto& d : dirs) best = std::min(best, std::acos(std::clamp(e.dot(d), -1.0, 1.0)));
    CHECK(best <= 1e-6);
  }

  // H_2 is empty for ex1
  auto Dex1 = decompose("ex1", 2);
  CHECK(hp_sample(Dex1, spec).empty());

  // the planar equation has the two diagonal lines
  auto Dp = decompose("planar", 2);
  CHECK(hp_sample(Dp, spec).size() == 4);
}

TEST_CASE("strong regularity estimates") {
  // regular identity system: the estimate is 1 for any alpha
  auto M = mapping::MappingModel(expr::parse_system({"x1", "x2"}, {"x1", "x2"}));
  auto Did = build_decomposition(M, vec({0, 0}), 2);
  for (double alpha : {0.01, 0.1, 1.0}) {
    auto est = strong_regularity_estimate(Did, alpha, 64, 42);
    CHECK(est.outcome == StrongRegularityEstimate::Outcome::Finite);
    CHECK(est.sup_inverse_norm == doctest::Approx(1.0).epsilon(1e-14));
  }

  // the quadric pair is strongly 2-regular at alpha = 0.1
  auto D = decompose("eq20a_F", 2);
  auto est = strong_regularity_estimate(D, 0.1, 4096, 42);
  CHECK(est.outcome == StrongRegularityEstimate::Outcome::Finite);
  CHECK(est.accepted > 0);
  CHECK(est.sup_inverse_norm > 0.0);

  // brute-force sphere-grid oracle: every band member is near one of the
  // two kernel lines and the factor operator has rank 2 there
  std::vector<Vec> lines{vec({1, 1, 0}).normalized(), vec({1, -1, 0}).normalized()};
  int grid_accepted = 0;
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 120; ++j) {
      double th = (i + 0.5) * M_PI / 60, ph = j * 2 * M_PI / 120;
      Vec h = vec({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)});
      bool in_band = true;
      for (int k = 1; k <= 2 && in_band; ++k)
        in_band = D.band_form(k, D.base_point(), h).norm() <= 0.1;
      if (!in_band) continue;
      ++grid_accepted;
      double best = 1e9;
      for (const auto& l : lines) best = std::min(best, std::acos(std::min(1.0, std::abs(l.dot(h)))));
      CHECK(best <= 0.3);
      CHECK(factor_operator(D, h).rank == 2);
    }
  }
  CHECK(grid_accepted > 0);

  // ex1 band is empty at small alpha
  auto Dex1 = decompose("ex1", 2);
  auto empty = strong_regularity_estimate(Dex1, 0.05, 4096, 42);
  CHECK(empty.outcome == StrongRegularityEstimate::Outcome::EmptyBand);
  CHECK(empty.accepted == 0);
}

TEST_CASE("newton chain on ex1") {
  auto M = builtin("ex1");
  auto chain = build_newton_chain(M, vec({0, 0}), vec({1, -1}), 2);
  testutil::check_close(chain.pbar()[0], mat({{0, 0}, {0, 1}}), 0.0);
  testutil::check_close(chain.factor_matrix(), mat({{1, 1}, {-1, 1}}), 0.0);
  // iteration matrix displayed in the worked scheme: [[1,1],[x2-1,x1+1]]
  Vec x = vec({0.3, -0.2});
  testutil::check_close(chain.iteration_matrix(M, x), mat({{1, 1}, {-0.2 - 1, 0.3 + 1}}), 1e-15);
  // the displayed residual: (x1+x2, x1*x2 + x2 - x1)
  testutil::check_close(chain.modified_residual(M, x),
                        vec({0.1, 0.3 * -0.2 + (-0.2) - 0.3}), 1e-15);
}

TEST_CASE("newton chain on the gradient system: three factors") {
  auto M = builtin("phi3");
  auto chain = build_newton_chain(M, vec({0, 0}), vec({1, 1}), 3);
  testutil::check_close(chain.pbar()[0], mat({{0, 0}, {0, 1}}), 1e-12);
  testutil::check_close(chain.pbar()[1], mat({{0.5, -0.5}, {-0.5, 0.5}}), 1e-12);
  testutil::check_close(chain.combined()[0], mat({{0.5, -0.5}, {-0.5, 1.5}}), 1e-12);
  testutil::check_close(chain.combined()[1], mat({{0, -0.5}, {0, 0.5}}), 1e-12);
  testutil::check_close(chain.factor_matrix(), mat({{2, -11}, {2, 11}}), 1e-12);
}

TEST_CASE("newton chain degenerates on regular systems") {
  auto M = mapping::MappingModel(
      expr::parse_system({"x1 - 1", "x1 + 2*x2"}, {"x1", "x2"}));
  auto chain = build_newton_chain(M, vec({1, -0.5}), vec({0.6, -0.8}), 2);
  CHECK(chain.pbar()[0].cwiseAbs().maxCoeff() <= 1e-14);
  testutil::check_close(chain.factor_matrix(), mat({{1, 0}, {1, 2}}), 1e-14);
}

TEST_CASE("newton chain rejects directions with a singular factor matrix") {
  auto M = builtin("ex1");
  CHECK_THROWS_AS(build_newton_chain(M, vec({0, 0}), vec({1, 1}), 2), SingularFactorMatrix);
}

TEST_CASE("direct sum: band dimensions exhaust the codomain, bands orthogonal") {
  for (const char* name : {"ex1", "reddien", "eq20a_F", "planar", "phi3"}) {
    auto D = decompose(name, registry::find(name)->p.value_or(2));
    int total = 0;
    for (int k = 1; k <= D.p(); ++k) total += D.band(k).dim();
    CHECK(total == D.m());
    for (int i = 1; i <= D.p(); ++i)
      for (int j = 1; j <= D.p(); ++j) {
        if (i == j) continue;
        CHECK((D.band_projector(i) * D.band_projector(j)).cwiseAbs().maxCoeff() <= 1e-10);
      }
    // F_i(x) = P_{Y_i} F(x) at random points
    Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
      Vec x = rng.gaussian_vector(D.n());
      Vec sum = Vec::Zero(D.m());
      for (int k = 1; k <= D.p(); ++k) sum += D.band_mapping(k, x);
      testutil::check_close(sum, D.model().evaluate(x), 1e-12);
    }
  }
}

TEST_CASE("decomposition is stable across sampling seeds") {
  for (const char* name : {"ex1", "reddien", "eq20a_F", "planar"}) {
    auto Da = decompose(name, 2, 42);
    auto Db = decompose(name, 2, 40961);
    REQUIRE(Da.p() == Db.p());
    for (int k = 1; k <= Da.p(); ++k) {
      REQUIRE(Da.band(k).dim() == Db.band(k).dim());
      auto angles = linalg::principal_angles(Da.band(k), Db.band(k));
      for (double a : angles) CHECK(a <= 1e-8);
    }
  }
}

TEST_CASE("banded factor operator and the chain matrix have equal rank at p = 2") {
  Rng rng(99);
  for (const char* name : {"ex1", "eq20a_F", "planar"}) {
    auto M = builtin(name);
    auto D = decompose(name, 2);
    REQUIRE(D.p() == 2);
    for (int trial = 0; trial < 40; ++trial) {
      Vec h = rng.unit_vector(D.n());
      auto fo = factor_operator(D, h);
      auto chain = assemble_newton_chain(M, D.base_point(), h, 2);
      CHECK(fo.rank == linalg::rank(chain.factor_matrix()));
    }
    // and exactly on the paper directions of ex1
    if (std::string(name) == "ex1") {
      CHECK(factor_operator(D, vec({1, 1})).rank ==
            linalg::rank(assemble_newton_chain(M, D.base_point(), vec({1, 1}), 2).factor_matrix()));
    }
  }
}
