#include "biopepa/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "biopepa/names.hpp"

namespace biopepa {

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  std::ostringstream out;
  out << severity_name(d.severity) << ' ' << d.code << ' ' << file << ':' << d.span.line << ':'
      << d.span.column << ' ' << d.message;
  return out.str();
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::vector<Diagnostic> to_diagnostics(const std::vector<ParseDiagnostic>& parse) {
  std::vector<Diagnostic> out;
  for (const auto& p : parse) out.push_back({p.severity, "SYNTAX_ERROR", p.message, p.span});
  return out;
}

std::optional<std::size_t> ReactionNetwork::species_index(std::string_view species,
                                                          std::string_view location) const {
  for (std::size_t i = 0; i < this->species.size(); ++i) {
    if (this->species[i].species == species && this->species[i].location == location) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> ReactionNetwork::reaction_index(std::string_view action) const {
  for (std::size_t i = 0; i < reactions.size(); ++i) {
    if (reactions[i].action == action) return i;
  }
  return std::nullopt;
}

std::string ReactionNetwork::species_name(std::size_t index) const {
  return qualified_name(species.at(index).species, species.at(index).location);
}

namespace {

using Instances = std::map<std::string, std::vector<std::string>, std::less<>>;

Instances instances_of(const BioPepaSystem& system) {
  Instances out;
  for (const auto& leaf : flatten_leaves(system, system.model)) {
    auto& locs = out[leaf.species];
    if (std::find(locs.begin(), locs.end(), leaf.location) == locs.end()) {
      locs.push_back(leaf.location);
    }
  }
  return out;
}

bool instantiated(const Instances& inst, std::string_view species, std::string_view location) {
  auto it = inst.find(species);
  return it != inst.end() &&
         std::find(it->second.begin(), it->second.end(), location) != it->second.end();
}

enum class ExprContext { ParameterValue, LocationSize, LawBody, ObservableBody };

/// Assigns reference kinds. Problems go to `sink` when given.
class Resolver {
 public:
  explicit Resolver(const BioPepaSystem& system)
      : system_(system), instances_(instances_of(system)) {
    for (const auto& l : system.locations) locations_.insert(l.name);
    for (const auto& p : system.parameters) parameters_.insert(p.name);
    for (const auto& o : system.observables) observables_.insert(o.name);
  }

  Expression resolve(const Expression& expr, ExprContext ctx, std::vector<Diagnostic>* sink,
                     const std::string& where) const {
    return map_references(expr, [&](const Reference& r, const SourceSpan& span) {
      RefKind kind = RefKind::Unresolved;
      std::string location = qualify(r, ctx, sink, where, span, kind);
      return Expression::ref(r.name, std::move(location), kind, span);
    });
  }

  const Instances& instances() const { return instances_; }
  // With an undefined composition the instance set is incomplete.
  void set_model_incomplete() { model_incomplete_ = true; }

 private:
  void report(std::vector<Diagnostic>* sink, std::string code, std::string message,
              const SourceSpan& span) const {
    if (sink) sink->push_back({Severity::Error, std::move(code), std::move(message), span});
  }

  // Returns the resolved location (for species amounts) and sets `kind`.
  std::string qualify(const Reference& r, ExprContext ctx, std::vector<Diagnostic>* sink,
                      const std::string& where, const SourceSpan& span, RefKind& kind) const {
    const std::string in = " in " + where;
    if (!r.location.empty()) {
      kind = RefKind::SpeciesAmount;
      if (ctx == ExprContext::ParameterValue || ctx == ExprContext::LocationSize) {
        report(sink, "INVALID_REFERENCE",
               "species amount '" + qualified_name(r.name, r.location) + "' is not allowed" + in,
               span);
      } else if (!locations_.count(r.location)) {
        report(sink, "UNDEFINED_LOCATION", "undefined location '" + r.location + "'" + in,
               span);
      } else if (!model_incomplete_ && !instantiated(instances_, r.name, r.location)) {
        report(sink, "UNDEFINED_SPECIES",
               "species '" + qualified_name(r.name, r.location) +
                   "' is not present in the model component" + in,
               span);
      }
      return r.location;
    }
    if (parameters_.count(r.name)) {
      kind = RefKind::Parameter;
      return {};
    }
    if (locations_.count(r.name)) {
      kind = RefKind::LocationSize;
      if (ctx == ExprContext::ParameterValue || ctx == ExprContext::LocationSize) {
        report(sink, "INVALID_REFERENCE",
               "location size '" + r.name + "' is not allowed" + in, span);
      }
      return {};
    }
    if (observables_.count(r.name)) {
      kind = RefKind::Observable;
      if (ctx != ExprContext::ObservableBody) {
        report(sink, "INVALID_REFERENCE", "observable '" + r.name + "' is not allowed" + in,
               span);
      }
      return {};
    }
    if (is_time_variable(r.name)) {
      kind = RefKind::Time;
      if (ctx == ExprContext::ParameterValue) {
        report(sink, "INVALID_REFERENCE", "time is not allowed" + in, span);
      }
      return {};
    }
    if (auto it = instances_.find(r.name); it != instances_.end()) {
      kind = RefKind::SpeciesAmount;
      if (ctx == ExprContext::ParameterValue || ctx == ExprContext::LocationSize) {
        report(sink, "INVALID_REFERENCE", "species amount '" + r.name + "' is not allowed" + in,
               span);
      } else if (it->second.size() > 1) {
        report(sink, "AMBIGUOUS_SPECIES",
               "species '" + r.name + "' exists in several locations; qualify it with @" + in,
               span);
      }
      return it->second.front();
    }
    kind = RefKind::Unresolved;
    report(sink, "UNDEFINED_PARAMETER", "undefined identifier '" + r.name + "'" + in, span);
    return {};
  }

  const BioPepaSystem& system_;
  Instances instances_;
  bool model_incomplete_ = false;
  std::set<std::string, std::less<>> locations_;
  std::set<std::string, std::less<>> parameters_;
  std::set<std::string, std::less<>> observables_;
};

struct RoleCounts {
  std::vector<std::pair<std::string, std::string>> reactants, products, activators, others;
};

/// Participants per action over instantiated species (transport terms
/// contribute a reactant at the source and a product at the destination).
std::map<std::string, RoleCounts> participants_by_action(const BioPepaSystem& system) {
  std::map<std::string, RoleCounts> out;
  for (const auto& leaf : flatten_leaves(system, system.model)) {
    const auto* comp = system.find_component(leaf.species);
    if (!comp) continue;
    for (const auto& term : comp->terms) {
      if (term.location != leaf.location) continue;
      auto& rc = out[term.action];
      std::pair<std::string, std::string> who{leaf.species, leaf.location};
      switch (term.role) {
        case Role::Reactant: rc.reactants.push_back(who); break;
        case Role::Product: rc.products.push_back(who); break;
        case Role::Activator: rc.activators.push_back(who); break;
        case Role::Inhibitor:
        case Role::Modifier: rc.others.push_back(who); break;
        case Role::TransportOut:
          rc.reactants.push_back(who);
          rc.products.push_back({leaf.species, term.destination});
          break;
      }
    }
  }
  return out;
}

template <class Node>
void detect_cycles(const std::vector<Node>& nodes,
                   const std::function<std::vector<std::string>(const Node&)>& deps,
                   const std::function<void(const Node&)>& on_cycle) {
  std::map<std::string, const Node*> by_name;
  for (const auto& n : nodes) by_name.emplace(n.name, &n);
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::function<void(const Node&)> visit = [&](const Node& n) {
    color[n.name] = 1;
    for (const auto& d : deps(n)) {
      auto it = by_name.find(d);
      if (it == by_name.end()) continue;
      int c = color[d];
      if (c == 1) {
        on_cycle(*it->second);
      } else if (c == 0) {
        visit(*it->second);
      }
    }
    color[n.name] = 2;
  };
  for (const auto& n : nodes) {
    if (color[n.name] == 0) visit(n);
  }
}

class Checker {
 public:
  explicit Checker(const BioPepaSystem& system) : sys_(system), resolver_(system) {}

  std::vector<Diagnostic> run() {
    check_names();
    check_locations();
    check_parameters();
    check_compositions();
    check_model_leaves();
    check_components();
    check_laws();
    check_observables();
    check_adjacency();
    check_cooperation(sys_.model);
    return std::move(out_);
  }

 private:
  void error(std::string code, std::string message, const SourceSpan& span) {
    out_.push_back({Severity::Error, std::move(code), std::move(message), span});
  }
  void warning(std::string code, std::string message, const SourceSpan& span) {
    out_.push_back({Severity::Warning, std::move(code), std::move(message), span});
  }

  void check_names() {
    // One namespace for locations, parameters, observables and compositions;
    // separate namespaces for actions and species components.
    std::map<std::string, std::string> shared;
    auto claim = [&](const std::string& name, const std::string& what, const SourceSpan& span) {
      auto [it, fresh] = shared.emplace(name, what);
      if (!fresh) {
        error("DUPLICATE_DEFINITION",
              what + " '" + name + "' is already defined as a " + it->second, span);
      }
    };
    for (const auto& l : sys_.locations) claim(l.name, "location", l.span);
    for (const auto& p : sys_.parameters) claim(p.name, "parameter", p.span);
    for (const auto& o : sys_.observables) claim(o.name, "observable", o.span);
    for (const auto& c : sys_.compositions) claim(c.name, "composition", c.span);

    std::set<std::string> actions;
    for (const auto& law : sys_.kinetic_laws) {
      if (!actions.insert(law.action).second) {
        error("DUPLICATE_DEFINITION", "kinetic law for '" + law.action + "' is defined twice",
              law.span);
      }
    }
    std::set<std::string> comps;
    for (const auto& c : sys_.components) {
      if (!comps.insert(c.name).second) {
        error("DUPLICATE_DEFINITION", "species component '" + c.name + "' is defined twice",
              c.span);
      }
    }
  }

  void check_locations() {
    std::map<std::string, const Location*> by_name;
    for (const auto& l : sys_.locations) by_name.emplace(l.name, &l);
    for (const auto& l : sys_.locations) {
      if (l.parent && !by_name.count(*l.parent)) {
        error("UNDEFINED_LOCATION",
              "location '" + l.name + "' is inside undefined location '" + *l.parent + "'",
              l.span);
        bad_locations_.insert(l.name);
      }
    }
    for (const auto& l : sys_.locations) {
      std::size_t hops = 0;
      const Location* cur = &l;
      while (cur->parent) {
        auto it = by_name.find(*cur->parent);
        if (it == by_name.end()) break;
        cur = it->second;
        if (cur == &l || ++hops > by_name.size()) {
          error("CYCLIC_HIERARCHY", "location '" + l.name + "' contains itself", l.span);
          break;
        }
      }
    }
    for (const auto& l : sys_.locations) {
      std::size_t before = out_.size();
      resolver_.resolve(l.size, ExprContext::LocationSize, &out_, "size of location " + l.name);
      if (out_.size() != before) bad_locations_.insert(l.name);
    }
  }

  void check_parameters() {
    for (const auto& p : sys_.parameters) {
      resolver_.resolve(p.value, ExprContext::ParameterValue, &out_, "parameter " + p.name);
    }
    detect_cycles<Parameter>(
        sys_.parameters,
        [](const Parameter& p) {
          std::vector<std::string> deps;
          for (const auto& r : collect_references(p.value)) deps.push_back(r.name);
          return deps;
        },
        [&](const Parameter& p) {
          error("CYCLIC_PARAMETER", "parameter '" + p.name + "' depends on itself", p.span);
        });
  }

  void check_compositions() {
    std::set<std::string> referenced;
    std::function<void(const ModelTree&)> refs = [&](const ModelTree& node) {
      if (!node) return;
      if (const auto* r = std::get_if<CompositionRef>(&node->data)) {
        referenced.insert(r->name);
        if (!sys_.find_composition(r->name)) {
          error("UNDEFINED_COMPOSITION", "undefined composition '" + r->name + "'", node->span);
          model_incomplete_ = true;
          resolver_.set_model_incomplete();
        }
      } else if (const auto* c = std::get_if<Cooperation>(&node->data)) {
        refs(c->lhs);
        refs(c->rhs);
      }
    };
    refs(sys_.model);
    for (const auto& c : sys_.compositions) refs(c.body);

    detect_cycles<LabeledComposition>(
        sys_.compositions,
        [](const LabeledComposition& c) {
          std::vector<std::string> deps;
          std::function<void(const ModelTree&)> walk = [&](const ModelTree& node) {
            if (!node) return;
            if (const auto* r = std::get_if<CompositionRef>(&node->data)) {
              deps.push_back(r->name);
            } else if (const auto* co = std::get_if<Cooperation>(&node->data)) {
              walk(co->lhs);
              walk(co->rhs);
            }
          };
          walk(c.body);
          return deps;
        },
        [&](const LabeledComposition& c) {
          error("CYCLIC_COMPOSITION", "composition '" + c.name + "' refers to itself", c.span);
        });

    for (const auto& c : sys_.compositions) {
      if (!referenced.count(c.name)) {
        warning("UNUSED_COMPOSITION", "composition '" + c.name + "' is never used", c.span);
      }
    }
  }

  void check_leaf(const SpeciesLeaf& leaf, const SourceSpan& span) {
    const auto name = qualified_name(leaf.species, leaf.location);
    if (!sys_.find_component(leaf.species)) {
      error("UNDEFINED_SPECIES", "species '" + leaf.species + "' has no component definition",
            span);
      model_incomplete_ = true;
      resolver_.set_model_incomplete();
    }
    if (!leaf.location.empty() &&
        std::none_of(sys_.locations.begin(), sys_.locations.end(),
                     [&](const Location& l) { return l.name == leaf.location; })) {
      error("UNDEFINED_LOCATION",
            "undefined location '" + leaf.location + "' for species '" + leaf.species + "'",
            span);
      tainted_species_.insert(leaf.species);
    }
    if (!(leaf.initial >= 0.0) || leaf.initial != std::floor(leaf.initial) ||
        leaf.initial > 9.0e15) {
      error("INVALID_INITIAL_COUNT",
            "initial amount of '" + name + "' must be a nonnegative integer molecule count, got " +
                format_number(leaf.initial),
            span);
    }
  }

  void check_model_leaves() {
    std::function<void(const ModelTree&)> walk = [&](const ModelTree& node) {
      if (!node) return;
      if (const auto* leaf = std::get_if<SpeciesLeaf>(&node->data)) {
        check_leaf(*leaf, node->span);
      } else if (const auto* c = std::get_if<Cooperation>(&node->data)) {
        walk(c->lhs);
        walk(c->rhs);
      }
    };
    walk(sys_.model);
    for (const auto& c : sys_.compositions) walk(c.body);

    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& leaf : flatten_leaves(sys_, sys_.model)) {
      if (!seen.insert({leaf.species, leaf.location}).second) {
        error("DUPLICATE_DEFINITION",
              "species '" + qualified_name(leaf.species, leaf.location) +
                  "' appears more than once in the model component",
              sys_.model->span);
      }
    }
  }

  bool location_declared(const std::string& name) const {
    return std::any_of(sys_.locations.begin(), sys_.locations.end(),
                       [&](const Location& l) { return l.name == name; });
  }

  void check_components() {
    const auto& inst = resolver_.instances();
    std::set<std::string> missing_law;
    for (const auto& comp : sys_.components) {
      if (!model_incomplete_ && !inst.count(comp.name)) {
        warning("UNUSED_SPECIES_COMPONENT",
                "species '" + comp.name + "' is not present in the model component", comp.span);
      }
      std::set<std::tuple<std::string, Role, std::string>> seen;
      for (const auto& term : comp.terms) {
        if (term.species != comp.name) {
          error("SPECIES_MISMATCH",
                "term of component '" + comp.name + "' names species '" + term.species + "'",
                term.span);
        }
        if (tainted_species_.count(comp.name)) tainted_actions_.insert(term.action);
        bool loc_ok = true;
        for (const auto* loc : {&term.location, &term.destination}) {
          if (!loc->empty() && !location_declared(*loc)) {
            error("UNDEFINED_LOCATION", "undefined location '" + *loc + "' in component '" +
                                            comp.name + "'",
                  term.span);
            tainted_actions_.insert(term.action);
            loc_ok = false;
          }
        }
        if (!seen.insert({term.action, term.role, term.location}).second) {
          error("DUPLICATE_PREFIX",
                "component '" + comp.name + "' repeats " + std::string(role_name(term.role)) +
                    " term for action '" + term.action + "'" +
                    (term.location.empty() ? "" : " at " + term.location),
                term.span);
        }
        if (!sys_.find_law(term.action) && missing_law.insert(term.action).second) {
          error("MISSING_KINETIC_LAW", "action '" + term.action + "' has no kinetic law",
                term.span);
        }
        if (loc_ok && !model_incomplete_ && inst.count(comp.name)) {
          bool here = instantiated(inst, comp.name, term.location);
          if (!here && !term.location.empty()) {
            warning("UNINSTANTIATED_TERM",
                    "term for action '" + term.action + "' refers to '" +
                        qualified_name(comp.name, term.location) +
                        "', which is not in the model component",
                    term.span);
          }
          if (here && term.role == Role::TransportOut &&
              !instantiated(inst, comp.name, term.destination)) {
            error("UNDEFINED_SPECIES",
                  "transport destination '" + qualified_name(comp.name, term.destination) +
                      "' is not in the model component",
                  term.span);
            tainted_actions_.insert(term.action);
          }
        }
      }
    }
  }

  void check_laws() {
    auto parts = participants_by_action(sys_);
    std::set<std::string> mentioned;
    for (const auto& comp : sys_.components) {
      for (const auto& t : comp.terms) mentioned.insert(t.action);
    }
    for (const auto& law : sys_.kinetic_laws) {
      const std::string where = "kinetic law of " + law.action;
      if (const auto* ma = std::get_if<MassAction>(&law.body)) {
        resolver_.resolve(ma->rate, ExprContext::LawBody, &out_, where);
      } else if (const auto* mm = std::get_if<MichaelisMenten>(&law.body)) {
        resolver_.resolve(mm->v_max, ExprContext::LawBody, &out_, where);
        resolver_.resolve(mm->k_m, ExprContext::LawBody, &out_, where);
      } else {
        resolver_.resolve(std::get<CustomLaw>(law.body).body, ExprContext::LawBody, &out_, where);
      }
      if (model_incomplete_ || tainted_actions_.count(law.action)) continue;
      auto it = parts.find(law.action);
      if (it == parts.end()) {
        if (!mentioned.count(law.action)) {
          error("UNUSED_KINETIC_LAW", "kinetic law '" + law.action + "' is not used by any species",
                law.span);
        } else {
          error("UNUSED_KINETIC_LAW",
                "no species in the model component takes part in action '" + law.action + "'",
                law.span);
        }
        continue;
      }
      const RoleCounts& rc = it->second;
      if (std::holds_alternative<MichaelisMenten>(law.body)) {
        bool shape = rc.reactants.size() == 1 && rc.products.size() == 1 &&
                     rc.activators.size() == 1 && rc.others.empty();
        bool distinct = shape && rc.reactants[0] != rc.products[0] &&
                        rc.reactants[0] != rc.activators[0] &&
                        rc.products[0] != rc.activators[0];
        if (!distinct) {
          std::ostringstream msg;
          msg << "fMM law of '" << law.action
              << "' needs exactly one reactant, one enzyme (activator) and one product, "
              << "found " << rc.reactants.size() << " reactant(s), " << rc.activators.size()
              << " activator(s), " << rc.products.size() << " product(s)";
          if (!rc.others.empty()) msg << " and " << rc.others.size() << " other modifier(s)";
          if (shape && !distinct) msg << " (the three species must be distinct)";
          error("MM_ROLE_MISMATCH", msg.str(), law.span);
        }
      } else if (std::holds_alternative<MassAction>(law.body) && rc.reactants.empty()) {
        error("MA_WITHOUT_REACTANTS",
              "fMA law of '" + law.action + "' is applied to a reaction with no reactants",
              law.span);
      }
    }
  }

  void check_observables() {
    for (const auto& o : sys_.observables) {
      resolver_.resolve(o.body, ExprContext::ObservableBody, &out_, "observable " + o.name);
    }
    detect_cycles<Observable>(
        sys_.observables,
        [](const Observable& o) {
          std::vector<std::string> deps;
          for (const auto& r : collect_references(o.body)) {
            if (r.location.empty()) deps.push_back(r.name);
          }
          return deps;
        },
        [&](const Observable& o) {
          error("CYCLIC_OBSERVABLE", "observable '" + o.name + "' depends on itself", o.span);
        });
  }

  void check_adjacency() {
    if (has_errors(out_)) return;  // the tree may be malformed
    LocationTree tree;
    try {
      tree = build_location_tree(sys_.locations);
    } catch (const std::exception&) {
      return;
    }
    for (const auto& [action, rc] : participants_by_action(sys_)) {
      std::vector<std::string> locs;
      for (const auto* group : {&rc.reactants, &rc.products, &rc.activators, &rc.others}) {
        for (const auto& p : *group) {
          if (!p.second.empty() &&
              std::find(locs.begin(), locs.end(), p.second) == locs.end()) {
            locs.push_back(p.second);
          }
        }
      }
      for (std::size_t i = 0; i < locs.size(); ++i) {
        for (std::size_t j = i + 1; j < locs.size(); ++j) {
          if (!tree.adjacent(locs[i], locs[j])) {
            const auto* law = sys_.find_law(action);
            warning("NON_ADJACENT_REACTION",
                    "action '" + action + "' involves species in non-adjacent locations '" +
                        locs[i] + "' and '" + locs[j] + "'",
                    law ? law->span : SourceSpan{});
            i = locs.size();
            break;
          }
        }
      }
    }
  }

  std::set<std::string> actions_of(const ModelTree& node, std::vector<std::string>& stack) {
    std::set<std::string> acts;
    if (!node) return acts;
    if (const auto* leaf = std::get_if<SpeciesLeaf>(&node->data)) {
      if (const auto* comp = sys_.find_component(leaf->species)) {
        for (const auto& t : comp->terms) {
          if (t.location == leaf->location) acts.insert(t.action);
        }
      }
    } else if (const auto* ref = std::get_if<CompositionRef>(&node->data)) {
      const auto* comp = sys_.find_composition(ref->name);
      if (comp && std::find(stack.begin(), stack.end(), ref->name) == stack.end()) {
        stack.push_back(ref->name);
        acts = actions_of(comp->body, stack);
        stack.pop_back();
      }
    } else {
      const auto& c = std::get<Cooperation>(node->data);
      acts = actions_of(c.lhs, stack);
      auto rhs = actions_of(c.rhs, stack);
      acts.insert(rhs.begin(), rhs.end());
    }
    return acts;
  }

  void check_cooperation(const ModelTree& node) {
    if (!node) return;
    const auto* c = std::get_if<Cooperation>(&node->data);
    if (!c) return;
    check_cooperation(c->lhs);
    check_cooperation(c->rhs);
    if (c->set.wildcard) return;
    std::vector<std::string> stack;
    auto lhs = actions_of(c->lhs, stack);
    auto rhs = actions_of(c->rhs, stack);
    const auto& set = c->set.actions;
    for (const auto& a : lhs) {
      if (rhs.count(a) && std::find(set.begin(), set.end(), a) == set.end()) {
        warning("COOPERATION_SET_OMISSION",
                "action '" + a +
                    "' is performed on both sides of a cooperation but is not in its set",
                node->span);
      }
    }
    for (const auto& a : set) {
      if (!lhs.count(a) && !rhs.count(a)) {
        warning("UNUSED_COOPERATION_ACTION",
                "cooperation set names '" + a + "', which no component performs", node->span);
      }
    }
  }

  const BioPepaSystem& sys_;
  Resolver resolver_;
  std::vector<Diagnostic> out_;
  std::set<std::string> bad_locations_;
  bool model_incomplete_ = false;
  std::set<std::string> tainted_species_;
  std::set<std::string> tainted_actions_;
};

}  // namespace

ExpansionResult expand_location_shorthand(const BioPepaSystem& system) {
  ExpansionResult result{system, {}};
  const Instances inst = instances_of(system);
  for (auto& comp : result.system.components) {
    auto it = inst.find(comp.name);
    std::vector<PrefixTerm> terms;
    for (const auto& term : comp.terms) {
      if (!term.location.empty() || (it != inst.end() && it->second.size() == 1 &&
                                     it->second.front().empty())) {
        terms.push_back(term);
        continue;
      }
      if (it == inst.end()) {
        result.diagnostics.push_back(
            {Severity::Error, "UNRESOLVED_LOCATION",
             "cannot place unqualified term '" + term.action + "' of species '" + comp.name +
                 "': the species is not in the model component",
             term.span});
        terms.push_back(term);
        continue;
      }
      for (const auto& loc : it->second) {
        PrefixTerm copy = term;
        copy.location = loc;
        terms.push_back(std::move(copy));
      }
    }
    comp.terms = std::move(terms);
  }
  return result;
}

std::vector<Diagnostic> check_system(const BioPepaSystem& system) {
  return Checker(system).run();
}

ReactionNetwork derive_reaction_network(const BioPepaSystem& system) {
  ReactionNetwork net;
  Resolver resolver(system);
  net.locations = build_location_tree(system.locations);

  for (const auto& leaf : flatten_leaves(system, system.model)) {
    net.species.push_back({leaf.species, leaf.location});
    net.initial_state.push_back(static_cast<std::int64_t>(leaf.initial));
  }

  auto resolve = [&](const Expression& e, ExprContext ctx, const std::string& where) {
    std::vector<Diagnostic> diags;
    Expression r = resolver.resolve(e, ctx, &diags, where);
    if (!diags.empty()) throw std::logic_error("unresolved model: " + diags.front().message);
    return r;
  };
  std::vector<Location> sized;
  for (const auto& l : net.locations.locations()) {
    Location copy = l;
    copy.size = resolve(l.size, ExprContext::LocationSize, "size of " + l.name);
    sized.push_back(std::move(copy));
  }
  net.locations = build_location_tree(std::move(sized));
  for (const auto& p : system.parameters) {
    net.parameters.push_back(
        {p.name, resolve(p.value, ExprContext::ParameterValue, p.name), p.span});
  }
  for (const auto& o : system.observables) {
    net.observables.push_back(
        {o.name, resolve(o.body, ExprContext::ObservableBody, o.name), o.span});
  }

  std::map<std::string, std::size_t> by_action;
  for (const auto& law : system.kinetic_laws) {
    Reaction r;
    r.action = law.action;
    r.law.action = law.action;
    r.law.span = law.span;
    const std::string where = "kinetic law of " + law.action;
    if (const auto* ma = std::get_if<MassAction>(&law.body)) {
      r.law.body = MassAction{resolve(ma->rate, ExprContext::LawBody, where)};
    } else if (const auto* mm = std::get_if<MichaelisMenten>(&law.body)) {
      r.law.body = MichaelisMenten{resolve(mm->v_max, ExprContext::LawBody, where),
                                   resolve(mm->k_m, ExprContext::LawBody, where)};
    } else {
      r.law.body = CustomLaw{resolve(std::get<CustomLaw>(law.body).body, ExprContext::LawBody,
                                     where)};
    }
    by_action.emplace(law.action, net.reactions.size());
    net.reactions.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < net.species.size(); ++i) {
    const auto& sp = net.species[i];
    const auto* comp = system.find_component(sp.species);
    if (!comp) throw std::logic_error("species without component: " + sp.species);
    for (const auto& term : comp->terms) {
      if (term.location != sp.location) continue;
      auto it = by_action.find(term.action);
      if (it == by_action.end()) throw std::logic_error("action without law: " + term.action);
      Reaction& r = net.reactions[it->second];
      Participant p{sp.species, sp.location, term.stoichiometry, i};
      switch (term.role) {
        case Role::Reactant: r.reactants.push_back(p); break;
        case Role::Product: r.products.push_back(p); break;
        case Role::Activator: r.activators.push_back(p); break;
        case Role::Inhibitor: r.inhibitors.push_back(p); break;
        case Role::Modifier: r.modifiers.push_back(p); break;
        case Role::TransportOut: {
          r.reactants.push_back(p);
          auto dest = net.species_index(sp.species, term.destination);
          if (!dest) throw std::logic_error("transport destination missing");
          r.products.push_back({sp.species, term.destination, term.stoichiometry, *dest});
          break;
        }
      }
    }
  }

  net.stoichiometry.assign(net.reactions.size(), std::vector<int>(net.species.size(), 0));
  for (std::size_t j = 0; j < net.reactions.size(); ++j) {
    for (const auto& p : net.reactions[j].reactants) net.stoichiometry[j][p.index] -= p.stoichiometry;
    for (const auto& p : net.reactions[j].products) net.stoichiometry[j][p.index] += p.stoichiometry;
  }
  return net;
}

std::vector<std::vector<std::int64_t>> conserved_moieties(const ReactionNetwork& network) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  const std::size_t rows = network.reactions.size();
  const std::size_t cols = network.species.size();
  if (rows * cols > 10000) {
    std::clog << "notice: conservation analysis skipped (" << rows << "x" << cols
              << " stoichiometry matrix exceeds 10000 entries)\n";
    return {};
  }
  std::vector<std::vector<cpp_rational>> m(rows, std::vector<cpp_rational>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = network.stoichiometry[i][j];
  }
  // Reduced row echelon form.
  std::vector<std::size_t> pivot_cols;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    cpp_rational inv = 1 / m[r][c];
    for (auto& v : m[r]) v *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c] == 0) continue;
      cpp_rational f = m[i][c];
      for (std::size_t k = c; k < cols; ++k) m[i][k] -= f * m[r][k];
    }
    pivot_cols.push_back(c);
    ++r;
  }
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivot_cols) is_pivot[c] = true;

  std::vector<std::vector<std::int64_t>> out;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<cpp_rational> v(cols);
    v[f] = 1;
    for (std::size_t i = 0; i < pivot_cols.size(); ++i) v[pivot_cols[i]] = -m[i][f];
    cpp_int lcm = 1;
    for (const auto& x : v) {
      cpp_int d = boost::multiprecision::denominator(x);
      lcm = lcm / boost::multiprecision::gcd(lcm, d) * d;
    }
    std::vector<cpp_int> iv(cols);
    cpp_int g = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      iv[j] = boost::multiprecision::numerator(v[j]) * (lcm / boost::multiprecision::denominator(v[j]));
      g = boost::multiprecision::gcd(g, iv[j] < 0 ? cpp_int(-iv[j]) : iv[j]);
    }
    bool pos = false, neg = false;
    for (auto& x : iv) {
      x /= g;
      pos |= x > 0;
      neg |= x < 0;
    }
    if (pos && neg) continue;
    std::vector<std::int64_t> vec(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      cpp_int x = neg ? cpp_int(-iv[j]) : iv[j];
      vec[j] = static_cast<std::int64_t>(x);
    }
    out.push_back(std::move(vec));
  }
  return out;
}

AnalysisResult analyze(const BioPepaSystem& system) {
  AnalysisResult result;
  ExpansionResult expanded = expand_location_shorthand(system);
  result.diagnostics = std::move(expanded.diagnostics);
  auto checks = check_system(expanded.system);
  result.diagnostics.insert(result.diagnostics.end(), checks.begin(), checks.end());
  if (!has_errors(result.diagnostics)) {
    result.network = derive_reaction_network(expanded.system);
  }
  return result;
}

}  // namespace biopepa
