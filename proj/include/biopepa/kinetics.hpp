#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "biopepa/analyzer.hpp"
#include "biopepa/model.hpp"

namespace biopepa {

/// Everything a resolved expression may read. `state` holds amounts in
/// network species order.
struct EvalEnvironment {
  const ParameterValues* parameters = nullptr;
  const ReactionNetwork* network = nullptr;
  const double* state = nullptr;
  double t = 0.0;
};

/// Tree-walking evaluation for one-off use (the simulators use compiled
/// programs). Throws Error(DivisionByZero) naming `context`.
double eval_expression(const Expression& expr, const EvalEnvironment& env,
                       const std::string& context = {});

/// Evaluates parameters so that later definitions may use earlier (or any
/// acyclic) ones. Throws UndefinedParameter or CyclicParameter.
ParameterValues resolve_parameters(const std::vector<Parameter>& parameters);

/// Expression lowered to a postfix program. Parameters and constant
/// location sizes are folded in at compile time.
class CompiledExpr {
 public:
  enum class Op : unsigned char { Const, Species, Time, Add, Sub, Mul, Div, Neg, PositiveSize };
  struct Instr {
    Op op;
    std::size_t index = 0;  // Species: state index
    double value = 0.0;     // Const
  };

  CompiledExpr() = default;

  /// `clamp` replaces negative species reads by zero.
  static CompiledExpr compile(const Expression& expr, const ReactionNetwork& network,
                              const ParameterValues& params, bool clamp,
                              std::string context = {});

  double operator()(const double* state, double t) const;

  bool is_constant() const noexcept { return constant_; }
  bool depends_on_time() const noexcept { return uses_time_; }
  /// Species indices read, sorted and unique.
  const std::vector<std::size_t>& reads() const noexcept { return reads_; }
  const std::vector<Instr>& program() const noexcept { return code_; }

 private:
  std::vector<Instr> code_;
  std::vector<std::size_t> reads_;
  std::size_t depth_ = 0;
  bool constant_ = true;
  bool uses_time_ = false;
  bool clamp_ = false;
  std::string context_;
};

/// A reaction's functional rate over the current state.
class RateFunction {
 public:
  enum class Kind { MassAction, MichaelisMenten, Custom };

  RateFunction() = default;

  double operator()(const double* state, double t) const;

  Kind kind() const noexcept { return kind_; }
  /// Superset of the state indices the rate reads, sorted and unique.
  const std::vector<std::size_t>& reads() const noexcept { return reads_; }
  const std::string& action() const noexcept { return action_; }
  bool depends_on_time() const noexcept {
    return first_.depends_on_time() || second_.depends_on_time();
  }

 private:
  friend RateFunction bind_kinetic_law(const KineticLaw&, const Reaction&,
                                       const ReactionNetwork&, const ParameterValues&);

  Kind kind_ = Kind::Custom;
  std::string action_;
  CompiledExpr first_;   // rate constant, v_max or custom body
  CompiledExpr second_;  // k_m
  std::vector<std::pair<std::size_t, int>> factors_;  // mass-action reactants
  std::size_t substrate_ = 0;
  std::size_t enzyme_ = 0;
  std::vector<std::size_t> reads_;
};

/// fMA(r): r * prod(x_i^k_i) over reactants. fMM(vM, kM): vM*E*S/(kM+S).
/// Custom: the body itself. Negative species reads are clamped to zero.
RateFunction bind_kinetic_law(const KineticLaw& law, const Reaction& reaction,
                              const ReactionNetwork& network, const ParameterValues& params);

/// One rate per reaction, in reaction order.
std::vector<RateFunction> bind_rates(const ReactionNetwork& network,
                                     const ParameterValues& params);

/// Observable bodies compiled without clamping; observables referenced
/// inside other observables are inlined.
std::vector<CompiledExpr> compile_observables(const ReactionNetwork& network,
                                              const ParameterValues& params);

}  // namespace biopepa
