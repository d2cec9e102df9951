#include "sublab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "sublab/errors.hpp"

namespace sublab {

struct Expression::Node {
  enum class Kind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };
  Kind kind = Kind::Number;
  double value = 0.0;
  int var = -1;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(const double* x) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::Variable: return x[var];
      case Kind::Add: return args[0]->eval(x) + args[1]->eval(x);
      case Kind::Sub: return args[0]->eval(x) - args[1]->eval(x);
      case Kind::Mul: return args[0]->eval(x) * args[1]->eval(x);
      case Kind::Div: return args[0]->eval(x) / args[1]->eval(x);
      case Kind::Pow: return std::pow(args[0]->eval(x), args[1]->eval(x));
      case Kind::Neg: return -args[0]->eval(x);
      case Kind::Call: return call(x);
    }
    return 0.0;
  }

  double call(const double* x) const {
    std::vector<double> v;
    v.reserve(args.size());
    for (const auto& a : args) v.push_back(a->eval(x));
    if (fn == "sqrt") return std::sqrt(v[0]);
    if (fn == "abs") return std::abs(v[0]);
    if (fn == "exp") return std::exp(v[0]);
    if (fn == "log") return std::log(v[0]);
    if (fn == "sin") return std::sin(v[0]);
    if (fn == "cos") return std::cos(v[0]);
    if (fn == "tanh") return std::tanh(v[0]);
    if (fn == "pow") return std::pow(v[0], v[1]);
    if (fn == "min") {
      double m = v[0];
      for (double a : v) m = std::min(m, a);
      return m;
    }
    if (fn == "max") {
      double m = v[0];
      for (double a : v) m = std::max(m, a);
      return m;
    }
    if (fn == "norm") {
      double s = 0.0;
      for (double a : v) s += a * a;
      return std::sqrt(s);
    }
    if (fn == "koranyi") {
      double r2 = v[0] * v[0] + v[1] * v[1];
      return std::pow(r2 * r2 + 16.0 * v[2] * v[2], 0.25);
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

struct FunctionSpec {
  const char* name;
  int min_args;
  int max_args;
};

constexpr FunctionSpec kFunctions[] = {
    {"sqrt", 1, 1}, {"abs", 1, 1}, {"exp", 1, 1}, {"log", 1, 1},  {"sin", 1, 1},
    {"cos", 1, 1},  {"tanh", 1, 1}, {"pow", 2, 2}, {"min", 1, 64}, {"max", 1, 64},
    {"norm", 1, 64}, {"koranyi", 3, 3},
};

class Parser {
 public:
  Parser(std::string_view s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  std::string_view s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression", msg + " at position " + std::to_string(pos_) + " in \"" +
                                        std::string(s_) + "\"");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(Kind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = binary(Kind::Add, n, term());
      else if (eat('-')) n = binary(Kind::Sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = binary(Kind::Mul, n, unary());
      else if (eat('/')) n = binary(Kind::Div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (eat('-')) {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Neg;
      n->args = {unary()};
      return n;
    }
    if (eat('+')) return unary();
    return power();
  }

  // Right-associative; the exponent may carry its own sign.
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return binary(Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    std::string rest(s_.substr(pos_));
    char* end = nullptr;
    double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("bad number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Number;
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') return call(name);
    if (name == "pi") return constant(M_PI);
    if (name == "e") return constant(M_E);
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::Variable;
        n->var = static_cast<int>(i);
        return n;
      }
    fail("unknown variable '" + name + "'");
  }

  static NodePtr constant(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Number;
    n->value = v;
    return n;
  }

  NodePtr call(const std::string& name) {
    const FunctionSpec* spec = nullptr;
    for (const auto& f : kFunctions)
      if (name == f.name) spec = &f;
    if (!spec) fail("unknown function '" + name + "'");
    eat('(');
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Call;
    n->fn = name;
    if (!eat(')')) {
      do {
        n->args.push_back(expr());
      } while (eat(','));
      if (!eat(')')) fail("missing ')' after arguments");
    }
    int k = static_cast<int>(n->args.size());
    if (k < spec->min_args || k > spec->max_args) fail("wrong argument count for " + name);
    return n;
  }
};

}  // namespace

Expression::Expression() {
  auto n = std::make_shared<Node>();
  root_ = n;
  text_ = "0";
}

Expression Expression::parse(std::string_view text, std::vector<std::string> variables) {
  Parser p(text, variables);
  Expression e;
  e.root_ = p.parse();
  e.text_ = std::string(text);
  return e;
}

Expression Expression::parse_for_dimension(std::string_view text, int n) {
  // Variables are resolved to the first matching name, so aliases share an index.
  std::vector<std::string> names;
  std::vector<std::string> aliases;
  if (n == 2) aliases = {"x", "y"};
  if (n == 3) aliases = {"x", "y", "t"};
  for (int k = 0; k < n; ++k) names.push_back("x" + std::to_string(k));
  // Parser looks names up by position, so map each alias onto the slot of its axis
  // by parsing against a combined table and then remapping indices.
  std::vector<std::string> table = names;
  table.insert(table.end(), aliases.begin(), aliases.end());
  if (n == 3) table.push_back("z");
  Expression e = parse(text, table);
  // Remap alias indices back onto axes.
  struct Remap {
    static std::shared_ptr<const Node> run(const std::shared_ptr<const Node>& node, int n, int naliases) {
      auto copy = std::make_shared<Node>(*node);
      if (copy->kind == Node::Kind::Variable && copy->var >= n) {
        int a = copy->var - n;
        copy->var = a < naliases ? a : 2;
      }
      for (auto& c : copy->args) c = run(c, n, naliases);
      return copy;
    }
  };
  e.root_ = Remap::run(e.root_, n, static_cast<int>(aliases.size()));
  return e;
}

double Expression::operator()(const double* x) const { return root_->eval(x); }

}  // namespace sublab
