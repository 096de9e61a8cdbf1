#include <cctype>
#include <sstream>

#include "biopepa/model.hpp"
#include "biopepa/names.hpp"

namespace biopepa {

namespace {

bool is_identifier(const std::string& s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

std::string operator_token(Role role) {
  switch (role) {
    case Role::Reactant: return "<<";
    case Role::Product: return ">>";
    case Role::Activator: return "(+)";
    case Role::Inhibitor: return "(-)";
    case Role::Modifier: return "(.)";
    case Role::TransportOut: return "->";
  }
  return "?";
}

std::string print_term(const PrefixTerm& term) {
  std::string prefix = term.stoichiometry == 1
                           ? term.action
                           : "(" + term.action + ", " + std::to_string(term.stoichiometry) + ")";
  if (term.role == Role::TransportOut) {
    return prefix + " " + qualified_name(term.species, term.location) + " -> " +
           qualified_name(term.species, term.destination);
  }
  return prefix + " " + operator_token(term.role) + " " +
         qualified_name(term.species, term.location);
}

void print_tree(const ModelTree& node, std::ostream& out) {
  if (!node) return;
  if (const auto* leaf = std::get_if<SpeciesLeaf>(&node->data)) {
    out << qualified_name(leaf->species, leaf->location) << '[' << format_number(leaf->initial)
        << ']';
    return;
  }
  if (const auto* ref = std::get_if<CompositionRef>(&node->data)) {
    out << ref->name;
    return;
  }
  const auto& coop = std::get<Cooperation>(node->data);
  print_tree(coop.lhs, out);
  if (coop.set.wildcard) {
    out << " <*> ";
  } else {
    out << " <";
    for (std::size_t i = 0; i < coop.set.actions.size(); ++i) {
      out << (i ? ", " : "") << coop.set.actions[i];
    }
    out << "> ";
  }
  bool wrap = std::holds_alternative<Cooperation>(coop.rhs->data);
  if (wrap) out << '(';
  print_tree(coop.rhs, out);
  if (wrap) out << ')';
}

}  // namespace

std::string pretty_print(const BioPepaSystem& system) {
  std::ostringstream out;
  for (const auto& loc : system.locations) {
    out << "location " << loc.name;
    if (loc.parent) out << " in " << *loc.parent;
    out << " : size = " << to_string(loc.size);
    if (!loc.unit.empty()) {
      out << ", unit = " << (is_identifier(loc.unit) ? loc.unit : "\"" + loc.unit + "\"");
    }
    out << ", kind = "
        << (loc.kind == LocationKind::Compartment ? "compartment" : "membrane") << ";\n";
  }
  for (const auto& p : system.parameters) {
    out << p.name << " = " << to_string(p.value) << ";\n";
  }
  for (const auto& law : system.kinetic_laws) {
    out << "kineticLawOf " << law.action << " : ";
    if (const auto* ma = std::get_if<MassAction>(&law.body)) {
      out << "fMA(" << to_string(ma->rate) << ")";
    } else if (const auto* mm = std::get_if<MichaelisMenten>(&law.body)) {
      out << "fMM(" << to_string(mm->v_max) << ", " << to_string(mm->k_m) << ")";
    } else {
      out << to_string(std::get<CustomLaw>(law.body).body);
    }
    out << ";\n";
  }
  for (const auto& comp : system.components) {
    out << comp.name << " = ";
    for (std::size_t i = 0; i < comp.terms.size(); ++i) {
      out << (i ? " + " : "") << print_term(comp.terms[i]);
    }
    out << ";\n";
  }
  for (const auto& obs : system.observables) {
    out << obs.name << " = " << to_string(obs.body) << ";\n";
  }
  for (const auto& lab : system.compositions) {
    out << lab.name << " ::= ";
    print_tree(lab.body, out);
    out << ";\n";
  }
  print_tree(system.model, out);
  out << '\n';
  return out.str();
}

}  // namespace biopepa
