#include "preg/registry.hpp"

#include "preg/expr.hpp"

namespace preg::registry {

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<BuiltinProblem> make_registry() {
  std::vector<BuiltinProblem> reg;

  reg.push_back({"ex1",
                 "square system (x1+x2, x1*x2) with a singular root at the origin",
                 ProblemKind::EquationSystem,
                 {"x1", "x2"},
                 {"x1+x2", "x1*x2"},
                 std::nullopt,
                 {},
                 vec({0, 0}),
                 vec({1, -1}),
                 2});

  reg.push_back({"reddien",
                 "square system (x1+x1*x2+x2^2, x1^2-2*x1+x2^2), rank-1 Jacobian at 0",
                 ProblemKind::EquationSystem,
                 {"x1", "x2"},
                 {"x1+x1*x2+x2^2", "x1^2-2*x1+x2^2"},
                 std::nullopt,
                 {},
                 vec({0, 0}),
                 std::nullopt,
                 2});

  reg.push_back({"phi3",
                 "gradient system of x1^2+x1^2*x2+x2^4; needs the 3-factor chain",
                 ProblemKind::EquationSystem,
                 {"x1", "x2"},
                 {"2*x1+2*x1*x2", "x1^2+4*x2^3"},
                 std::nullopt,
                 {},
                 vec({0, 0}),
                 vec({1, 1}),
                 3});

  reg.push_back({"eq20a",
                 "min x2^2+x3 over two quadric constraints, fully degenerate Jacobian",
                 ProblemKind::EqualityConstrainedMin,
                 {"x1", "x2", "x3"},
                 {"x1^2-x2^2+x3^2", "x1^2-x2^2+x3^2+x2*x3"},
                 std::string("x2^2+x3"),
                 {},
                 vec({0, 0, 0}),
                 vec({1, 1, 0}),
                 2});

  reg.push_back({"planar",
                 "single equation x1^2-x2^2; the tangent cone is a line pair",
                 ProblemKind::EquationSystem,
                 {"x1", "x2"},
                 {"x1^2-x2^2"},
                 std::nullopt,
                 {},
                 vec({0, 0}),
                 std::nullopt,
                 2});

  reg.push_back({"ex_9",
                 "min x1^2+x2^2+4*x1*x2 over x >= 0; both constraints weakly active",
                 ProblemKind::InequalityConstrainedMin,
                 {"x1", "x2"},
                 {},
                 std::string("x1^2+x2^2+4*x1*x2"),
                 {"-x1", "-x2"},
                 vec({0, 0, 0, 0}),  // (x*, lambda*)
                 vec({0, 0, 1, 1}),
                 2});

  return reg;
}

}  // namespace

const std::vector<BuiltinProblem>& all() {
  static const std::vector<BuiltinProblem> reg = make_registry();
  return reg;
}

const BuiltinProblem* find(const std::string& name) {
  std::string key = name == "eq20a_F" ? "eq20a" : name;
  for (const auto& p : all())
    if (p.name == key) return &p;
  return nullptr;
}

mapping::MappingModel equation_model(const BuiltinProblem& prob) {
  if (prob.equations.empty())
    throw std::invalid_argument("problem '" + prob.name + "' has no equation system");
  return mapping::MappingModel(expr::parse_system(prob.equations, prob.variables));
}

}  // namespace preg::registry
