#include "preg/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace preg::expr {

namespace {

double int_pow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

bool exps_all_zero(const std::vector<int>& e) {
  return std::all_of(e.begin(), e.end(), [](int v) { return v == 0; });
}

// graded lex: lower total degree first, then lexicographic on exponents
bool term_order(const Monomial& a, const Monomial& b) {
  int da = std::accumulate(a.exps.begin(), a.exps.end(), 0);
  int db = std::accumulate(b.exps.begin(), b.exps.end(), 0);
  if (da != db) return da < db;
  return a.exps < b.exps;
}

std::string format_coeff(double c) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", c);
  return buf;
}

}  // namespace

double ExprNode::eval(const Vec& x) const {
  switch (kind) {
    case NodeKind::Constant:
      return value;
    case NodeKind::Variable:
      return x[var];
    case NodeKind::Sum: {
      double s = 0.0;
      for (const auto& c : children) s += c.eval(x);
      return s;
    }
    case NodeKind::Product: {
      double p = 1.0;
      for (const auto& c : children) p *= c.eval(x);
      return p;
    }
    case NodeKind::Power:
      return int_pow(children.front().eval(x), exponent);
  }
  return 0.0;
}

Polynomial::Polynomial(int nvars, std::vector<Monomial> terms)
    : nvars_(nvars), terms_(std::move(terms)) {
  normalize();
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  if (c != 0.0) p.terms_.push_back({c, std::vector<int>(nvars, 0)});
  return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
  Polynomial p(nvars);
  std::vector<int> e(nvars, 0);
  e[index] = 1;
  p.terms_.push_back({1.0, std::move(e)});
  return p;
}

void Polynomial::normalize() {
  std::map<std::vector<int>, double> acc;
  for (auto& t : terms_) acc[t.exps] += t.coeff;
  terms_.clear();
  for (auto& [e, c] : acc)
    if (c != 0.0) terms_.push_back({c, e});
  std::sort(terms_.begin(), terms_.end(), term_order);
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_)
    d = std::max(d, std::accumulate(t.exps.begin(), t.exps.end(), 0));
  return d;
}

double Polynomial::eval(const Vec& x) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (int i = 0; i < nvars_; ++i)
      if (t.exps[i]) v *= int_pow(x[i], t.exps[i]);
    s += v;
  }
  return s;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(nvars_);
  for (const auto& t : terms_) {
    if (t.exps[var] == 0) continue;
    Monomial d = t;
    d.coeff *= d.exps[var];
    d.exps[var] -= 1;
    out.terms_.push_back(std::move(d));
  }
  out.normalize();
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out(nvars_);
  out.terms_ = terms_;
  out.terms_.insert(out.terms_.end(), other.terms_.begin(), other.terms_.end());
  out.normalize();
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  return *this + other.scaled(-1.0);
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial out(nvars_);
  out.terms_.reserve(terms_.size() * other.terms_.size());
  for (const auto& a : terms_)
    for (const auto& b : other.terms_) {
      Monomial t;
      t.coeff = a.coeff * b.coeff;
      t.exps.resize(nvars_);
      for (int i = 0; i < nvars_; ++i) t.exps[i] = a.exps[i] + b.exps[i];
      out.terms_.push_back(std::move(t));
    }
  out.normalize();
  return out;
}

Polynomial Polynomial::scaled(double c) const {
  Polynomial out(nvars_);
  if (c == 0.0) return out;
  out.terms_ = terms_;
  for (auto& t : out.terms_) t.coeff *= c;
  return out;
}

Polynomial Polynomial::pow(int exponent) const {
  Polynomial out = Polynomial::constant(nvars_, 1.0);
  for (int i = 0; i < exponent; ++i) out = out * (*this);
  return out;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    double c = t.coeff;
    if (i == 0) {
      if (c < 0) s += "-", c = -c;
    } else {
      s += c < 0 ? " - " : " + ";
      if (c < 0) c = -c;
    }
    bool constant_term = exps_all_zero(t.exps);
    bool unit = (c == 1.0) && !constant_term;
    if (!unit) s += format_coeff(c);
    bool first_factor = unit;
    for (int v = 0; v < nvars_; ++v) {
      if (t.exps[v] == 0) continue;
      if (!first_factor) s += "*";
      s += names[v];
      if (t.exps[v] > 1) s += "^" + std::to_string(t.exps[v]);
      first_factor = false;
    }
  }
  return s;
}

PolySystem::PolySystem(std::vector<std::string> variables, std::vector<ExprNode> asts,
                       std::vector<Polynomial> components)
    : names_(std::move(variables)), asts_(std::move(asts)), polys_(std::move(components)) {
  if (names_.empty()) throw std::invalid_argument("PolySystem: need at least one variable");
  if (polys_.empty()) throw std::invalid_argument("PolySystem: need at least one component");
}

PolySystem::PolySystem(std::vector<std::string> variables, std::vector<Polynomial> components)
    : PolySystem(std::move(variables), {}, std::move(components)) {}

Vec PolySystem::eval(const Vec& x) const {
  if (x.size() != n()) throw std::invalid_argument("PolySystem::eval: dimension mismatch");
  Vec y(m());
  for (int i = 0; i < m(); ++i) y[i] = polys_[i].eval(x);
  return y;
}

std::vector<std::string> PolySystem::to_strings() const {
  std::vector<std::string> out;
  out.reserve(polys_.size());
  for (const auto& p : polys_) out.push_back(p.to_string(names_));
  return out;
}

// ---------------------------------------------------------------------------
// parser

namespace {

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Caret, LParen, RParen, End } kind;
  double value = 0.0;
  bool integral = false;  // Number: literal had pure integer form
  std::string text;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    std::size_t start = i_;
    if (i_ >= src_.size()) return {Token::End, 0, false, "", start};
    char c = src_[i_];
    switch (c) {
      case '+': ++i_; return {Token::Plus, 0, false, "+", start};
      case '-': ++i_; return {Token::Minus, 0, false, "-", start};
      case '*': ++i_; return {Token::Star, 0, false, "*", start};
      case '^': ++i_; return {Token::Caret, 0, false, "^", start};
      case '(': ++i_; return {Token::LParen, 0, false, "(", start};
      case ')': ++i_; return {Token::RParen, 0, false, ")", start};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      Token t{Token::Ident, 0, false, src_.substr(i_, j - i_), start};
      i_ = j;
      return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }

 private:
  Token lex_number(std::size_t start) {
    std::size_t j = i_;
    bool integral = true;
    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    if (j < src_.size() && src_[j] == '.') {
      integral = false;
      ++j;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
        integral = false;
        j = k;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(src_.data() + i_, src_.data() + j, value);
    if (res.ec != std::errc()) throw ParseError("malformed number", start);
    Token t{Token::Number, value, integral, src_.substr(i_, j - i_), start};
    i_ = j;
    return t;
  }

  const std::string& src_;
  std::size_t i_ = 0;
};

class Parser {
 public:
  Parser(const std::string& src, const std::vector<std::string>* variables)
      : lex_(src), vars_(variables) {
    advance();
  }

  ExprNode parse() {
    ExprNode e = parse_expr();
    if (cur_.kind != Token::End) throw ParseError("unexpected trailing input", cur_.pos);
    return e;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  ExprNode parse_expr() {
    ExprNode sum;
    sum.kind = NodeKind::Sum;
    sum.children.push_back(parse_term());
    while (cur_.kind == Token::Plus || cur_.kind == Token::Minus) {
      bool neg = cur_.kind == Token::Minus;
      advance();
      ExprNode t = parse_term();
      if (neg) t = negate(std::move(t));
      sum.children.push_back(std::move(t));
    }
    if (sum.children.size() == 1) return std::move(sum.children.front());
    return sum;
  }

  ExprNode parse_term() {
    ExprNode prod;
    prod.kind = NodeKind::Product;
    prod.children.push_back(parse_factor());
    while (cur_.kind == Token::Star) {
      advance();
      prod.children.push_back(parse_factor());
    }
    if (prod.children.size() == 1) return std::move(prod.children.front());
    return prod;
  }

  ExprNode parse_factor() {
    bool neg = false;
    if (cur_.kind == Token::Minus) {
      neg = true;
      advance();
    }
    ExprNode base = parse_base();
    if (cur_.kind == Token::Caret) {
      std::size_t caret_pos = cur_.pos;
      advance();
      if (cur_.kind == Token::Minus)
        throw ParseError("negative exponent not allowed", cur_.pos);
      if (cur_.kind != Token::Number) throw ParseError("expected exponent", caret_pos);
      if (!cur_.integral || cur_.value != std::floor(cur_.value))
        throw ParseError("fractional exponent not allowed", cur_.pos);
      ExprNode pw;
      pw.kind = NodeKind::Power;
      pw.exponent = static_cast<int>(cur_.value);
      pw.children.push_back(std::move(base));
      advance();
      base = std::move(pw);
    }
    return neg ? negate(std::move(base)) : std::move(base);
  }

  ExprNode parse_base() {
    switch (cur_.kind) {
      case Token::Number: {
        ExprNode e;
        e.kind = NodeKind::Constant;
        e.value = cur_.value;
        advance();
        return e;
      }
      case Token::Ident: {
        if (!vars_) throw ParseError("variable '" + cur_.text + "' in constant expression", cur_.pos);
        auto it = std::find(vars_->begin(), vars_->end(), cur_.text);
        if (it == vars_->end())
          throw ParseError("unknown variable '" + cur_.text + "'", cur_.pos);
        ExprNode e;
        e.kind = NodeKind::Variable;
        e.var = static_cast<int>(it - vars_->begin());
        advance();
        return e;
      }
      case Token::LParen: {
        advance();
        ExprNode e = parse_expr();
        if (cur_.kind != Token::RParen) throw ParseError("expected ')'", cur_.pos);
        advance();
        return e;
      }
      default:
        throw ParseError("expected number, variable or '('", cur_.pos);
    }
  }

  static ExprNode negate(ExprNode e) {
    ExprNode m;
    m.kind = NodeKind::Product;
    ExprNode minus_one;
    minus_one.kind = NodeKind::Constant;
    minus_one.value = -1.0;
    m.children.push_back(std::move(minus_one));
    m.children.push_back(std::move(e));
    return m;
  }

  Lexer lex_;
  const std::vector<std::string>* vars_;
  Token cur_;
};

}  // namespace

ExprNode parse_expression(const std::string& source, const std::vector<std::string>& variables) {
  return Parser(source, &variables).parse();
}

double parse_constant(const std::string& source) {
  ExprNode e = Parser(source, nullptr).parse();
  return e.eval(Vec());
}

Polynomial lower_to_polynomial(const ExprNode& node, int nvars) {
  switch (node.kind) {
    case NodeKind::Constant:
      return Polynomial::constant(nvars, node.value);
    case NodeKind::Variable:
      return Polynomial::variable(nvars, node.var);
    case NodeKind::Sum: {
      Polynomial p(nvars);
      for (const auto& c : node.children) p = p + lower_to_polynomial(c, nvars);
      return p;
    }
    case NodeKind::Product: {
      Polynomial p = Polynomial::constant(nvars, 1.0);
      for (const auto& c : node.children) p = p * lower_to_polynomial(c, nvars);
      return p;
    }
    case NodeKind::Power:
      return lower_to_polynomial(node.children.front(), nvars).pow(node.exponent);
  }
  return Polynomial(nvars);
}

PolySystem parse_system(const std::vector<std::string>& sources,
                        const std::vector<std::string>& variables) {
  if (variables.empty()) throw std::invalid_argument("parse_system: no variables declared");
  std::vector<ExprNode> asts;
  std::vector<Polynomial> polys;
  asts.reserve(sources.size());
  for (const auto& src : sources) {
    asts.push_back(parse_expression(src, variables));
    polys.push_back(lower_to_polynomial(asts.back(), static_cast<int>(variables.size())));
  }
  return PolySystem(variables, std::move(asts), std::move(polys));
}

// ---------------------------------------------------------------------------
// tensors

SymTensor::SymTensor(int comps, int vars, int order)
    : comps_(comps), vars_(vars), order_(order) {
  std::size_t sz = comps_;
  for (int i = 0; i < order_; ++i) sz *= vars_;
  data_.assign(sz, 0.0);
}

namespace {
std::size_t flat_index(int vars, const std::vector<int>& idx) {
  std::size_t f = 0;
  for (int v : idx) f = f * vars + v;
  return f;
}
}  // namespace

double& SymTensor::at(int comp, const std::vector<int>& idx) {
  std::size_t stride = data_.size() / comps_;
  return data_[comp * stride + flat_index(vars_, idx)];
}

double SymTensor::at(int comp, const std::vector<int>& idx) const {
  std::size_t stride = data_.size() / comps_;
  return data_[comp * stride + flat_index(vars_, idx)];
}

SymTensor SymTensor::contract_last(const Vec& h) const {
  if (order_ == 0) throw std::invalid_argument("contract_last: order-0 tensor");
  if (h.size() != vars_) throw std::invalid_argument("contract_last: dimension mismatch");
  SymTensor out(comps_, vars_, order_ - 1);
  std::size_t blocks = out.data_.size();
  for (std::size_t b = 0; b < blocks; ++b) {
    double s = 0.0;
    for (int j = 0; j < vars_; ++j) s += data_[b * vars_ + j] * h[j];
    out.data_[b] = s;
  }
  return out;
}

SymTensor SymTensor::contract(const Vec& h, int copies) const {
  if (copies < 0 || copies > order_)
    throw std::invalid_argument("contract: invalid number of copies");
  SymTensor t = *this;
  for (int i = 0; i < copies; ++i) t = t.contract_last(h);
  return t;
}

Vec SymTensor::as_vector() const {
  if (order_ != 0) throw std::logic_error("as_vector: tensor order is not 0");
  Vec v(comps_);
  for (int i = 0; i < comps_; ++i) v[i] = data_[i];
  return v;
}

Mat SymTensor::as_matrix() const {
  if (order_ != 1) throw std::logic_error("as_matrix: tensor order is not 1");
  Mat m(comps_, vars_);
  for (int i = 0; i < comps_; ++i)
    for (int j = 0; j < vars_; ++j) m(i, j) = data_[i * vars_ + j];
  return m;
}

Mat SymTensor::combine_components(const Vec& w) const {
  if (order_ != 2) throw std::logic_error("combine_components: tensor order is not 2");
  if (w.size() != comps_) throw std::invalid_argument("combine_components: weight size");
  Mat m = Mat::Zero(vars_, vars_);
  std::size_t stride = static_cast<std::size_t>(vars_) * vars_;
  for (int c = 0; c < comps_; ++c)
    for (int a = 0; a < vars_; ++a)
      for (int b = 0; b < vars_; ++b) m(a, b) += w[c] * data_[c * stride + a * vars_ + b];
  return m;
}

namespace {

void enumerate_sorted_tuples(int n, int k, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  int lo = cur.empty() ? 0 : cur.back();
  for (int v = lo; v < n; ++v) {
    cur.push_back(v);
    enumerate_sorted_tuples(n, k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

DerivTensor::DerivTensor(const PolySystem& sys, int order)
    : order_(order), comps_(sys.m()), vars_(sys.n()) {
  if (order < 1) throw std::invalid_argument("DerivTensor: order must be >= 1");
  std::vector<int> cur;
  enumerate_sorted_tuples(vars_, order, cur, tuples_);
  entries_.resize(comps_);
  for (int c = 0; c < comps_; ++c) {
    entries_[c].reserve(tuples_.size());
    for (const auto& tup : tuples_) {
      Polynomial p = sys.component(c);
      for (int v : tup) p = p.derivative(v);
      entries_[c].push_back(std::move(p));
    }
  }
}

SymTensor DerivTensor::eval(const Vec& x) const {
  if (x.size() != vars_) throw std::invalid_argument("DerivTensor::eval: dimension mismatch");
  SymTensor out(comps_, vars_, order_);
  for (int c = 0; c < comps_; ++c) {
    for (std::size_t r = 0; r < tuples_.size(); ++r) {
      double v = entries_[c][r].eval(x);
      if (v == 0.0) continue;
      std::vector<int> idx = tuples_[r];
      // write to every distinct permutation of the sorted tuple
      do {
        out.at(c, idx) = v;
      } while (std::next_permutation(idx.begin(), idx.end()));
    }
  }
  return out;
}

Mat DerivTensor::contracted_matrix(const Vec& x, const Vec& h) const {
  return eval(x).contract(h, order_ - 1).as_matrix();
}

Vec DerivTensor::contracted_vector(const Vec& x, const Vec& h) const {
  return eval(x).contract(h, order_).as_vector();
}

DerivTensor differentiate(const PolySystem& sys, int order, int max_order) {
  if (order < 1) throw std::invalid_argument("differentiate: order must be >= 1");
  if (order > max_order)
    throw std::invalid_argument("differentiate: order " + std::to_string(order) +
                                " exceeds configured maximum " + std::to_string(max_order));
  return DerivTensor(sys, order);
}

SymTensor eval_contraction(const PolySystem& sys, int order, const Vec& x, const Vec& h,
                           int copies, int max_order) {
  if (copies < 1 || copies > order)
    throw std::invalid_argument("eval_contraction: need 1 <= copies <= order");
  if (x.size() != sys.n() || h.size() != sys.n())
    throw std::invalid_argument("eval_contraction: dimension mismatch");
  return differentiate(sys, order, max_order).eval(x).contract(h, copies);
}

}  // namespace preg::expr
