#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "preg/types.hpp"

namespace preg::expr {

inline constexpr int kDefaultMaxDerivativeOrder = 4;

// Raised by the parser; position is a byte offset into the source string.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
        pos_(pos) {}
  std::size_t position() const noexcept { return pos_; }

 private:
  std::size_t pos_;
};

enum class NodeKind { Constant, Variable, Sum, Product, Power };

// Expression tree as parsed. Powers carry a nonnegative integer exponent
// and a single child; variables refer into the owning system's name list.
struct ExprNode {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;                // Constant
  int var = -1;                      // Variable
  int exponent = 1;                  // Power
  std::vector<ExprNode> children;    // Sum, Product, Power

  double eval(const Vec& x) const;
};

// coeff * prod_i x_i^exps[i]
struct Monomial {
  double coeff = 0.0;
  std::vector<int> exps;
};

// Multivariate polynomial in canonical form: exponent vectors unique,
// terms in graded-lex order, zero coefficients dropped.
class Polynomial {
 public:
  Polynomial() : nvars_(0) {}
  explicit Polynomial(int nvars) : nvars_(nvars) {}
  Polynomial(int nvars, std::vector<Monomial> terms);

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int index);

  int nvars() const { return nvars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  double eval(const Vec& x) const;
  Polynomial derivative(int var) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial scaled(double c) const;
  Polynomial pow(int exponent) const;

  // Canonical text form; parses back to an identical polynomial.
  std::string to_string(const std::vector<std::string>& names) const;

 private:
  void normalize();
  int nvars_;
  std::vector<Monomial> terms_;
};

// A mapping F : R^n -> R^m given componentwise by polynomials.
class PolySystem {
 public:
  PolySystem(std::vector<std::string> variables, std::vector<ExprNode> asts,
             std::vector<Polynomial> components);

  // Construct directly from canonical polynomials (no source text).
  PolySystem(std::vector<std::string> variables, std::vector<Polynomial> components);

  int n() const { return static_cast<int>(names_.size()); }
  int m() const { return static_cast<int>(polys_.size()); }
  const std::vector<std::string>& variables() const { return names_; }
  const Polynomial& component(int i) const { return polys_.at(i); }
  const std::vector<Polynomial>& components() const { return polys_; }

  Vec eval(const Vec& x) const;
  std::vector<std::string> to_strings() const;

 private:
  std::vector<std::string> names_;
  std::vector<ExprNode> asts_;
  std::vector<Polynomial> polys_;
};

// Parse one expression over the named variables.
ExprNode parse_expression(const std::string& source, const std::vector<std::string>& variables);

// Parse a full system; one expression string per component.
PolySystem parse_system(const std::vector<std::string>& sources,
                        const std::vector<std::string>& variables);

// Constant expression (no variables), e.g. "1e-5+1e-15"; used for CLI vectors.
double parse_constant(const std::string& source);

Polynomial lower_to_polynomial(const ExprNode& node, int nvars);

// Dense numeric tensor with `order` symmetric slots of size n plus a leading
// component index of size m. data[(c, i1, ..., ik)] with i1 fastest-last.
class SymTensor {
 public:
  SymTensor(int comps, int vars, int order);

  int comps() const { return comps_; }
  int vars() const { return vars_; }
  int order() const { return order_; }

  double& at(int comp, const std::vector<int>& idx);
  double at(int comp, const std::vector<int>& idx) const;

  // Contract the last slot with h; order drops by one.
  SymTensor contract_last(const Vec& h) const;
  // Contract `copies` slots with h.
  SymTensor contract(const Vec& h, int copies) const;

  // Views for the common low orders.
  Vec as_vector() const;  // order 0: R^m
  Mat as_matrix() const;  // order 1: m x n

  // Weighted sum of components: sum_c w[c] * T[c]; order-2 result as matrix.
  Mat combine_components(const Vec& w) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int comps_, vars_, order_;
  std::vector<double> data_;
};

// Order-k derivative of a PolySystem, stored symbolically on sorted
// multi-indices (one polynomial per distinct entry).
class DerivTensor {
 public:
  DerivTensor(const PolySystem& sys, int order);

  int order() const { return order_; }
  int comps() const { return comps_; }
  int vars() const { return vars_; }

  // Dense symmetric values at x.
  SymTensor eval(const Vec& x) const;

  // F^(k)(x)[h]^{k-1} as an m x n matrix.
  Mat contracted_matrix(const Vec& x, const Vec& h) const;
  // F^(k)(x)[h]^k in R^m.
  Vec contracted_vector(const Vec& x, const Vec& h) const;

  const Polynomial& entry(int comp, int rank) const { return entries_[comp][rank]; }
  const std::vector<std::vector<int>>& index_set() const { return tuples_; }

 private:
  int order_, comps_, vars_;
  std::vector<std::vector<int>> tuples_;           // sorted multi-indices
  std::vector<std::vector<Polynomial>> entries_;   // [comp][tuple rank]
};

// The k-th derivative tensor of the system, exact. Throws when k exceeds
// the configured maximum order.
DerivTensor differentiate(const PolySystem& sys, int order,
                          int max_order = kDefaultMaxDerivativeOrder);

// F^(k)(x)[h]^j contracted in j slots; result keeps k-j symmetric slots.
SymTensor eval_contraction(const PolySystem& sys, int order, const Vec& x, const Vec& h,
                           int copies, int max_order = kDefaultMaxDerivativeOrder);

}  // namespace preg::expr
