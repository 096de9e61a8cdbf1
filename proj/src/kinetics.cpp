#include "biopepa/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "biopepa/error.hpp"
#include "biopepa/names.hpp"

namespace biopepa {

namespace {

std::string where(const std::string& context) {
  return context.empty() ? std::string() : " in " + context;
}

const Observable* find_observable(const ReactionNetwork& net, const std::string& name) {
  for (const auto& o : net.observables) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

double eval_in(const Expression& expr, const EvalEnvironment& env, const std::string& context,
               int depth) {
  if (depth > 64) throw Error(ErrorCode::UnresolvedReference, "observable nesting too deep");
  return evaluate(
      expr,
      [&](const Reference& r) -> std::optional<double> {
        switch (r.kind) {
          case RefKind::SpeciesAmount: {
            if (!env.network || !env.state) return std::nullopt;
            auto idx = env.network->species_index(r.name, r.location);
            if (!idx) return std::nullopt;
            return env.state[*idx];
          }
          case RefKind::LocationSize:
            if (!env.network || !env.parameters) return std::nullopt;
            return location_size_at(env.network->locations, r.name, env.t, *env.parameters);
          case RefKind::Time:
            return env.t;
          case RefKind::Observable: {
            if (!env.network) return std::nullopt;
            const auto* obs = find_observable(*env.network, r.name);
            if (!obs) return std::nullopt;
            return eval_in(obs->body, env, context, depth + 1);
          }
          case RefKind::Parameter:
          case RefKind::Unresolved:
            if (env.parameters) {
              if (auto it = env.parameters->find(r.name); it != env.parameters->end()) {
                return it->second;
              }
            }
            if (r.kind == RefKind::Unresolved && is_time_variable(r.name)) return env.t;
            return std::nullopt;
        }
        return std::nullopt;
      },
      context);
}

struct Piece {
  bool constant = true;
  double value = 0.0;
  std::vector<CompiledExpr::Instr> code;
  std::size_t depth = 0;
};

class Compiler {
 public:
  Compiler(const ReactionNetwork& net, const ParameterValues& params, const std::string& context)
      : net_(net), params_(params), context_(context) {}

  Piece compile(const Expression& expr, int nesting = 0) {
    if (nesting > 64) {
      throw Error(ErrorCode::UnresolvedReference, "expression nesting too deep" + where(context_));
    }
    const ExprNode& node = expr.node();
    if (const auto* n = std::get_if<NumberLit>(&node.data)) return constant(n->value);
    if (const auto* r = std::get_if<Reference>(&node.data)) return reference(*r, nesting);
    if (const auto* neg = std::get_if<NegateExpr>(&node.data)) {
      Piece p = compile(neg->operand, nesting + 1);
      if (p.constant) return constant(-p.value);
      p.code.push_back({CompiledExpr::Op::Neg});
      return p;
    }
    const auto& b = std::get<BinaryExpr>(node.data);
    Piece lhs = compile(b.lhs, nesting + 1);
    Piece rhs = compile(b.rhs, nesting + 1);
    if (lhs.constant && rhs.constant) {
      switch (b.op) {
        case BinaryOp::Add: return constant(lhs.value + rhs.value);
        case BinaryOp::Sub: return constant(lhs.value - rhs.value);
        case BinaryOp::Mul: return constant(lhs.value * rhs.value);
        case BinaryOp::Div:
          if (rhs.value == 0.0) {
            throw Error(ErrorCode::DivisionByZero, "division by zero" + where(context_));
          }
          return constant(lhs.value / rhs.value);
      }
    }
    Piece out;
    out.constant = false;
    emit(out, lhs);
    emit(out, rhs);
    out.depth = std::max(materialized_depth(lhs), materialized_depth(rhs) + 1);
    CompiledExpr::Op op = CompiledExpr::Op::Add;
    switch (b.op) {
      case BinaryOp::Add: op = CompiledExpr::Op::Add; break;
      case BinaryOp::Sub: op = CompiledExpr::Op::Sub; break;
      case BinaryOp::Mul: op = CompiledExpr::Op::Mul; break;
      case BinaryOp::Div: op = CompiledExpr::Op::Div; break;
    }
    out.code.push_back({op});
    return out;
  }

  static std::size_t materialized_depth(const Piece& p) { return p.constant ? 1 : p.depth; }

  static void emit(Piece& out, const Piece& p) {
    if (p.constant) {
      out.code.push_back({CompiledExpr::Op::Const, 0, p.value});
    } else {
      out.code.insert(out.code.end(), p.code.begin(), p.code.end());
    }
  }

  bool uses_time = false;
  std::vector<std::size_t> reads;

 private:
  static Piece constant(double v) {
    Piece p;
    p.value = v;
    p.depth = 1;
    return p;
  }

  Piece reference(const Reference& r, int nesting) {
    switch (r.kind) {
      case RefKind::SpeciesAmount: {
        auto idx = net_.species_index(r.name, r.location);
        if (!idx) {
          throw Error(ErrorCode::UnresolvedReference,
                      "unknown species '" + qualified_name(r.name, r.location) + "'" +
                          where(context_));
        }
        reads.push_back(*idx);
        Piece p;
        p.constant = false;
        p.depth = 1;
        p.code.push_back({CompiledExpr::Op::Species, *idx});
        return p;
      }
      case RefKind::Time: {
        uses_time = true;
        Piece p;
        p.constant = false;
        p.depth = 1;
        p.code.push_back({CompiledExpr::Op::Time});
        return p;
      }
      case RefKind::LocationSize: {
        const Location& loc = net_.locations.at(r.name);
        Piece p = compile(loc.size, nesting + 1);
        if (p.constant) {
          if (!(p.value > 0.0)) {
            throw Error(ErrorCode::NonpositiveSize, "size of location '" + r.name +
                                                        "' is not positive (" +
                                                        format_number(p.value) + ")");
          }
          return p;
        }
        p.code.push_back({CompiledExpr::Op::PositiveSize});
        return p;
      }
      case RefKind::Observable: {
        const Observable* obs = find_observable(net_, r.name);
        if (!obs) {
          throw Error(ErrorCode::UnresolvedReference,
                      "unknown observable '" + r.name + "'" + where(context_));
        }
        return compile(obs->body, nesting + 1);
      }
      case RefKind::Parameter:
      case RefKind::Unresolved: {
        if (auto it = params_.find(r.name); it != params_.end()) return constant(it->second);
        if (r.kind == RefKind::Unresolved && is_time_variable(r.name)) {
          return reference({r.name, {}, RefKind::Time}, nesting);
        }
        throw Error(ErrorCode::UndefinedParameter,
                    "undefined parameter '" + r.name + "'" + where(context_));
      }
    }
    throw Error(ErrorCode::UnresolvedReference, "bad reference" + where(context_));
  }

  const ReactionNetwork& net_;
  const ParameterValues& params_;
  const std::string& context_;
};

void sort_unique(std::vector<std::size_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

double eval_expression(const Expression& expr, const EvalEnvironment& env,
                       const std::string& context) {
  return eval_in(expr, env, context, 0);
}

ParameterValues resolve_parameters(const std::vector<Parameter>& parameters) {
  std::map<std::string, const Parameter*, std::less<>> defs;
  for (const auto& p : parameters) defs.emplace(p.name, &p);
  ParameterValues values;
  std::map<std::string, int, std::less<>> state;  // 1 in progress, 2 done

  std::function<double(const Parameter&)> value_of = [&](const Parameter& p) -> double {
    if (auto it = values.find(p.name); it != values.end()) return it->second;
    if (state[p.name] == 1) {
      throw Error(ErrorCode::CyclicParameter, "parameter '" + p.name + "' depends on itself");
    }
    state[p.name] = 1;
    double v = evaluate(
        p.value,
        [&](const Reference& r) -> std::optional<double> {
          auto it = defs.find(r.name);
          if (!r.location.empty() || it == defs.end()) {
            throw Error(ErrorCode::UndefinedParameter,
                        "undefined parameter '" + qualified_name(r.name, r.location) +
                            "' in definition of '" + p.name + "'");
          }
          return value_of(*it->second);
        },
        "parameter " + p.name);
    state[p.name] = 2;
    values[p.name] = v;
    return v;
  };
  for (const auto& p : parameters) value_of(p);
  return values;
}

CompiledExpr CompiledExpr::compile(const Expression& expr, const ReactionNetwork& network,
                                   const ParameterValues& params, bool clamp,
                                   std::string context) {
  CompiledExpr out;
  out.context_ = std::move(context);
  Compiler compiler(network, params, out.context_);
  Piece p = compiler.compile(expr);
  if (p.constant) p.code = {{Op::Const, 0, p.value}};
  out.code_ = std::move(p.code);
  out.depth_ = Compiler::materialized_depth(p);
  out.constant_ = p.constant;
  out.uses_time_ = compiler.uses_time;
  out.reads_ = std::move(compiler.reads);
  sort_unique(out.reads_);
  out.clamp_ = clamp;
  return out;
}

double CompiledExpr::operator()(const double* state, double t) const {
  if (code_.size() == 1 && code_[0].op == Op::Const) return code_[0].value;
  double small[32] = {};
  std::vector<double> big;
  double* stack = small;
  if (depth_ > 32) {
    big.resize(depth_);
    stack = big.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: stack[sp++] = in.value; break;
      case Op::Species: {
        double v = state[in.index];
        stack[sp++] = (clamp_ && v < 0.0) ? 0.0 : v;
        break;
      }
      case Op::Time: stack[sp++] = t; break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div:
        --sp;
        if (stack[sp] == 0.0) {
          throw Error(ErrorCode::DivisionByZero, "division by zero" + where(context_));
        }
        stack[sp - 1] /= stack[sp];
        break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::PositiveSize:
        if (!(stack[sp - 1] > 0.0)) {
          throw Error(ErrorCode::NonpositiveSize,
                      "location size is not positive (" + format_number(stack[sp - 1]) +
                          ") at t=" + format_number(t) + where(context_));
        }
        break;
    }
  }
  return stack[0];
}

double RateFunction::operator()(const double* state, double t) const {
  switch (kind_) {
    case Kind::MassAction: {
      double rate = first_(state, t);
      for (const auto& [idx, k] : factors_) {
        double x = state[idx] < 0.0 ? 0.0 : state[idx];
        for (int i = 0; i < k; ++i) rate *= x;
      }
      return rate;
    }
    case Kind::MichaelisMenten: {
      double s = state[substrate_] < 0.0 ? 0.0 : state[substrate_];
      if (s == 0.0) return 0.0;
      double e = state[enzyme_] < 0.0 ? 0.0 : state[enzyme_];
      double denom = second_(state, t) + s;
      if (denom == 0.0) {
        throw Error(ErrorCode::DivisionByZero, "division by zero in kinetic law of " + action_);
      }
      return first_(state, t) * e * s / denom;
    }
    case Kind::Custom:
      return first_(state, t);
  }
  return 0.0;
}

RateFunction bind_kinetic_law(const KineticLaw& law, const Reaction& reaction,
                              const ReactionNetwork& network, const ParameterValues& params) {
  RateFunction rf;
  rf.action_ = reaction.action;
  const std::string context = "kinetic law of " + reaction.action;
  if (const auto* ma = std::get_if<MassAction>(&law.body)) {
    rf.kind_ = RateFunction::Kind::MassAction;
    rf.first_ = CompiledExpr::compile(ma->rate, network, params, true, context);
    for (const auto& p : reaction.reactants) {
      rf.factors_.emplace_back(p.index, p.stoichiometry);
      rf.reads_.push_back(p.index);
    }
  } else if (const auto* mm = std::get_if<MichaelisMenten>(&law.body)) {
    rf.kind_ = RateFunction::Kind::MichaelisMenten;
    if (reaction.reactants.size() != 1 || reaction.activators.size() != 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "fMM needs one reactant and one activator in " + context);
    }
    rf.first_ = CompiledExpr::compile(mm->v_max, network, params, true, context);
    rf.second_ = CompiledExpr::compile(mm->k_m, network, params, true, context);
    rf.substrate_ = reaction.reactants.front().index;
    rf.enzyme_ = reaction.activators.front().index;
    rf.reads_.push_back(rf.substrate_);
    rf.reads_.push_back(rf.enzyme_);
    rf.reads_.insert(rf.reads_.end(), rf.second_.reads().begin(), rf.second_.reads().end());
  } else {
    rf.kind_ = RateFunction::Kind::Custom;
    rf.first_ = CompiledExpr::compile(std::get<CustomLaw>(law.body).body, network, params, true,
                                      context);
  }
  rf.reads_.insert(rf.reads_.end(), rf.first_.reads().begin(), rf.first_.reads().end());
  sort_unique(rf.reads_);
  return rf;
}

std::vector<RateFunction> bind_rates(const ReactionNetwork& network,
                                     const ParameterValues& params) {
  std::vector<RateFunction> out;
  out.reserve(network.reactions.size());
  for (const auto& r : network.reactions) {
    out.push_back(bind_kinetic_law(r.law, r, network, params));
  }
  return out;
}

std::vector<CompiledExpr> compile_observables(const ReactionNetwork& network,
                                              const ParameterValues& params) {
  std::vector<CompiledExpr> out;
  for (const auto& o : network.observables) {
    out.push_back(CompiledExpr::compile(o.body, network, params, false, "observable " + o.name));
  }
  return out;
}

}  // namespace biopepa
