#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace biopepa {

/// Byte range plus 1-based line/column of its first byte.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 0;
  int column = 0;
};

/// What an identifier inside an expression denotes. Parsing leaves every
/// reference Unresolved except `name@loc`, which is always a species amount.
enum class RefKind { Unresolved, Parameter, SpeciesAmount, LocationSize, Time, Observable };

enum class BinaryOp { Add, Sub, Mul, Div };

struct ExprNode;

/// Immutable arithmetic expression tree with value semantics (nodes are
/// shared, never mutated).
class Expression {
 public:
  Expression() = default;

  static Expression number(double value, SourceSpan span = {});
  static Expression ref(std::string name, std::string location = {},
                        RefKind kind = RefKind::Unresolved, SourceSpan span = {});
  static Expression binary(BinaryOp op, Expression lhs, Expression rhs, SourceSpan span = {});
  static Expression negate(Expression operand, SourceSpan span = {});

  bool empty() const noexcept { return node_ == nullptr; }
  const ExprNode& node() const { return *node_; }
  SourceSpan span() const;

 private:
  explicit Expression(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

struct NumberLit {
  double value = 0.0;
};

struct Reference {
  std::string name;
  std::string location;  // empty unless written as name@location
  RefKind kind = RefKind::Unresolved;
};

struct BinaryExpr {
  BinaryOp op;
  Expression lhs;
  Expression rhs;
};

struct NegateExpr {
  Expression operand;
};

struct ExprNode {
  std::variant<NumberLit, Reference, BinaryExpr, NegateExpr> data;
  SourceSpan span;
};

/// Canonical text form; parenthesizes only where precedence requires.
/// Numbers print in shortest round-trip form.
std::string to_string(const Expression& expr);
std::string format_number(double value);

/// Structural equality ignoring spans (reference kinds are compared).
bool structurally_equal(const Expression& a, const Expression& b);

/// Every reference in left-to-right order.
std::vector<Reference> collect_references(const Expression& expr);
bool references_species(const Expression& expr);

/// Rebuilds the tree, replacing each reference by `fn(ref, span)`.
Expression map_references(
    const Expression& expr,
    const std::function<Expression(const Reference&, const SourceSpan&)>& fn);

/// Looks a reference up; returns nullopt when it is not bound.
using ReferenceLookup = std::function<std::optional<double>(const Reference&)>;

/// Plain tree-walking evaluation. Throws Error(DivisionByZero) on a zero
/// denominator and Error(UnresolvedReference) when lookup yields nothing.
/// `context` is appended to error messages.
double evaluate(const Expression& expr, const ReferenceLookup& lookup,
                const std::string& context = {});

}  // namespace biopepa
