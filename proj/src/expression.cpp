#include "biopepa/expression.hpp"

#include <charconv>
#include <cmath>
#include <type_traits>

#include "biopepa/error.hpp"

namespace biopepa {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int precedence(BinaryOp op) {
  return (op == BinaryOp::Add || op == BinaryOp::Sub) ? 1 : 2;
}

char symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
  }
  return '?';
}

// 3 = atom or negation
int node_precedence(const Expression& e) {
  if (const auto* b = std::get_if<BinaryExpr>(&e.node().data)) return precedence(b->op);
  return 3;
}

void print(const Expression& e, std::string& out) {
  std::visit(overloaded{
                 [&](const NumberLit& n) { out += format_number(n.value); },
                 [&](const Reference& r) {
                   out += r.name;
                   if (!r.location.empty()) {
                     out += '@';
                     out += r.location;
                   }
                 },
                 [&](const NegateExpr& n) {
                   out += '-';
                   bool wrap = node_precedence(n.operand) < 3 ||
                               std::holds_alternative<NegateExpr>(n.operand.node().data);
                   if (wrap) out += '(';
                   print(n.operand, out);
                   if (wrap) out += ')';
                 },
                 [&](const BinaryExpr& b) {
                   int p = precedence(b.op);
                   bool wrap_l = node_precedence(b.lhs) < p;
                   // left-associative: a right operand of equal precedence needs parens
                   bool wrap_r = node_precedence(b.rhs) <= p;
                   if (wrap_l) out += '(';
                   print(b.lhs, out);
                   if (wrap_l) out += ')';
                   out += ' ';
                   out += symbol(b.op);
                   out += ' ';
                   if (wrap_r) out += '(';
                   print(b.rhs, out);
                   if (wrap_r) out += ')';
                 },
             },
             e.node().data);
}

}  // namespace

Expression Expression::number(double value, SourceSpan span) {
  return Expression(std::make_shared<const ExprNode>(ExprNode{NumberLit{value}, span}));
}

Expression Expression::ref(std::string name, std::string location, RefKind kind,
                           SourceSpan span) {
  return Expression(std::make_shared<const ExprNode>(
      ExprNode{Reference{std::move(name), std::move(location), kind}, span}));
}

Expression Expression::binary(BinaryOp op, Expression lhs, Expression rhs, SourceSpan span) {
  return Expression(std::make_shared<const ExprNode>(
      ExprNode{BinaryExpr{op, std::move(lhs), std::move(rhs)}, span}));
}

Expression Expression::negate(Expression operand, SourceSpan span) {
  return Expression(
      std::make_shared<const ExprNode>(ExprNode{NegateExpr{std::move(operand)}, span}));
}

SourceSpan Expression::span() const { return node_ ? node_->span : SourceSpan{}; }

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

std::string to_string(const Expression& expr) {
  std::string out;
  if (!expr.empty()) print(expr, out);
  return out;
}

bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty();
  const auto& da = a.node().data;
  const auto& db = b.node().data;
  if (da.index() != db.index()) return false;
  return std::visit(
      overloaded{
          [&](const NumberLit& n) { return n.value == std::get<NumberLit>(db).value; },
          [&](const Reference& r) {
            const auto& o = std::get<Reference>(db);
            return r.name == o.name && r.location == o.location && r.kind == o.kind;
          },
          [&](const NegateExpr& n) {
            return structurally_equal(n.operand, std::get<NegateExpr>(db).operand);
          },
          [&](const BinaryExpr& x) {
            const auto& o = std::get<BinaryExpr>(db);
            return x.op == o.op && structurally_equal(x.lhs, o.lhs) &&
                   structurally_equal(x.rhs, o.rhs);
          },
      },
      da);
}

std::vector<Reference> collect_references(const Expression& expr) {
  std::vector<Reference> refs;
  std::function<void(const Expression&)> walk = [&](const Expression& e) {
    if (e.empty()) return;
    std::visit(overloaded{
                   [](const NumberLit&) {},
                   [&](const Reference& r) { refs.push_back(r); },
                   [&](const NegateExpr& n) { walk(n.operand); },
                   [&](const BinaryExpr& b) {
                     walk(b.lhs);
                     walk(b.rhs);
                   },
               },
               e.node().data);
  };
  walk(expr);
  return refs;
}

bool references_species(const Expression& expr) {
  for (const auto& r : collect_references(expr)) {
    if (!r.location.empty() || r.kind == RefKind::SpeciesAmount) return true;
  }
  return false;
}

Expression map_references(
    const Expression& expr,
    const std::function<Expression(const Reference&, const SourceSpan&)>& fn) {
  if (expr.empty()) return expr;
  const auto& node = expr.node();
  return std::visit(
      overloaded{
          [&](const NumberLit&) { return expr; },
          [&](const Reference& r) { return fn(r, node.span); },
          [&](const NegateExpr& n) {
            return Expression::negate(map_references(n.operand, fn), node.span);
          },
          [&](const BinaryExpr& b) {
            return Expression::binary(b.op, map_references(b.lhs, fn),
                                      map_references(b.rhs, fn), node.span);
          },
      },
      node.data);
}

double evaluate(const Expression& expr, const ReferenceLookup& lookup,
                const std::string& context) {
  const auto suffix = context.empty() ? std::string{} : " (" + context + ")";
  std::function<double(const Expression&)> eval = [&](const Expression& e) -> double {
    return std::visit(
        overloaded{
            [](const NumberLit& n) { return n.value; },
            [&](const Reference& r) {
              auto v = lookup(r);
              if (!v) {
                std::string name = r.location.empty() ? r.name : r.name + "@" + r.location;
                throw Error(ErrorCode::UnresolvedReference,
                            "unbound identifier '" + name + "'" + suffix);
              }
              return *v;
            },
            [&](const NegateExpr& n) { return -eval(n.operand); },
            [&](const BinaryExpr& b) {
              double l = eval(b.lhs);
              double r = eval(b.rhs);
              switch (b.op) {
                case BinaryOp::Add: return l + r;
                case BinaryOp::Sub: return l - r;
                case BinaryOp::Mul: return l * r;
                case BinaryOp::Div:
                  if (r == 0.0) {
                    throw Error(ErrorCode::DivisionByZero,
                                "division by zero in '" + to_string(e) + "'" + suffix);
                  }
                  return l / r;
              }
              return 0.0;
            },
        },
        e.node().data);
  };
  return eval(expr);
}

}  // namespace biopepa
