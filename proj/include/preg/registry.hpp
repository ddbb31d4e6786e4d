#pragma once

#include <optional>
#include <string>
#include <vector>

#include "preg/mapping.hpp"
#include "preg/types.hpp"

namespace preg::registry {

enum class ProblemKind { EquationSystem, EqualityConstrainedMin, InequalityConstrainedMin };

struct BuiltinProblem {
  std::string name;
  std::string description;
  ProblemKind kind;
  std::vector<std::string> variables;
  std::vector<std::string> equations;      // F components (equality constraints)
  std::optional<std::string> objective;    // minimization problems
  std::vector<std::string> inequalities;   // g_i(x) <= 0
  Vec root;                                 // declared solution (x, or (x, lambda))
  std::optional<Vec> h;                     // scheme direction when known
  std::optional<int> p;                     // intended factor order
};

const std::vector<BuiltinProblem>& all();

// Resolves aliases as well ("eq20a_F" is the equation view of "eq20a");
// returns nullptr when unknown.
const BuiltinProblem* find(const std::string& name);

// The equation mapping of a problem: F itself, or the equality constraints
// of a minimization problem.
mapping::MappingModel equation_model(const BuiltinProblem& prob);

}  // namespace preg::registry
