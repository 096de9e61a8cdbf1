#include "biopepa/model.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "biopepa/error.hpp"
#include "biopepa/names.hpp"

namespace biopepa {

std::optional<std::size_t> LocationTree::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    if (locations_[i].name == name) return i;
  }
  return std::nullopt;
}

const Location* LocationTree::find(std::string_view name) const {
  auto i = index_of(name);
  return i ? &locations_[*i] : nullptr;
}

const Location& LocationTree::at(std::string_view name) const {
  if (const auto* loc = find(name)) return *loc;
  throw Error(ErrorCode::UnknownLocation, "unknown location '" + std::string(name) + "'");
}

std::optional<std::string> LocationTree::parent_of(std::string_view name) const {
  return at(name).parent;
}

std::vector<std::string> LocationTree::children_of(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& loc : locations_) {
    if (loc.parent && *loc.parent == name) out.push_back(loc.name);
  }
  return out;
}

std::vector<std::string> LocationTree::roots() const {
  std::vector<std::string> out;
  for (const auto& loc : locations_) {
    if (!loc.parent) out.push_back(loc.name);
  }
  return out;
}

bool LocationTree::adjacent(std::string_view a, std::string_view b) const {
  auto ia = index_of(a);
  auto ib = index_of(b);
  if (!ia || !ib) return false;
  if (*ia == *ib) return true;
  const auto& pa = parent_[*ia];
  const auto& pb = parent_[*ib];
  if (pa && *pa == *ib) return true;
  if (pb && *pb == *ia) return true;
  return pa && pb && *pa == *pb;
}

LocationTree build_location_tree(std::vector<Location> locations) {
  LocationTree tree;
  std::set<std::string, std::less<>> seen;
  for (const auto& loc : locations) {
    if (!seen.insert(loc.name).second) {
      throw Error(ErrorCode::DuplicateLocation, "location '" + loc.name + "' declared twice");
    }
  }
  tree.locations_ = std::move(locations);
  tree.parent_.resize(tree.locations_.size());
  for (std::size_t i = 0; i < tree.locations_.size(); ++i) {
    const auto& parent = tree.locations_[i].parent;
    if (!parent) continue;
    auto p = tree.index_of(*parent);
    if (!p) {
      throw Error(ErrorCode::UnknownParent, "location '" + tree.locations_[i].name +
                                                "' is inside undeclared location '" +
                                                *parent + "'");
    }
    tree.parent_[i] = p;
  }
  for (std::size_t i = 0; i < tree.locations_.size(); ++i) {
    std::size_t hops = 0;
    for (auto cur = tree.parent_[i]; cur; cur = tree.parent_[*cur]) {
      if (*cur == i || ++hops > tree.locations_.size()) {
        throw Error(ErrorCode::CyclicHierarchy,
                    "location '" + tree.locations_[i].name + "' contains itself");
      }
    }
  }
  return tree;
}

double location_size_at(const LocationTree& tree, std::string_view name, double t,
                        const ParameterValues& params) {
  const Location& loc = tree.at(name);
  double size = evaluate(
      loc.size,
      [&](const Reference& r) -> std::optional<double> {
        if (!r.location.empty()) return std::nullopt;
        if (auto it = params.find(r.name); it != params.end()) return it->second;
        if (is_time_variable(r.name)) return t;
        return std::nullopt;
      },
      "size of location " + loc.name);
  if (!(size > 0.0)) {
    throw Error(ErrorCode::NonpositiveSize, "location '" + loc.name + "' has size " +
                                                format_number(size) + " at t=" +
                                                format_number(t));
  }
  return size;
}

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::Reactant: return "reactant";
    case Role::Product: return "product";
    case Role::Activator: return "activator";
    case Role::Inhibitor: return "inhibitor";
    case Role::Modifier: return "modifier";
    case Role::TransportOut: return "transport";
  }
  return "?";
}

ModelTree make_leaf(std::string species, std::string location, double initial,
                    SourceSpan span) {
  return std::make_shared<const ModelNode>(
      ModelNode{SpeciesLeaf{std::move(species), std::move(location), initial}, span});
}

ModelTree make_ref(std::string name, SourceSpan span) {
  return std::make_shared<const ModelNode>(ModelNode{CompositionRef{std::move(name)}, span});
}

ModelTree make_cooperation(ModelTree lhs, ModelTree rhs, CooperationSet set,
                           SourceSpan span) {
  return std::make_shared<const ModelNode>(
      ModelNode{Cooperation{std::move(lhs), std::move(rhs), std::move(set)}, span});
}

namespace {

template <class T>
const T* find_named(const std::vector<T>& items, std::string_view name) {
  for (const auto& item : items) {
    if (item.name == name) return &item;
  }
  return nullptr;
}

}  // namespace

const KineticLaw* BioPepaSystem::find_law(std::string_view action) const {
  for (const auto& law : kinetic_laws) {
    if (law.action == action) return &law;
  }
  return nullptr;
}

const SpeciesComponent* BioPepaSystem::find_component(std::string_view name) const {
  return find_named(components, name);
}

const LabeledComposition* BioPepaSystem::find_composition(std::string_view name) const {
  return find_named(compositions, name);
}

const Parameter* BioPepaSystem::find_parameter(std::string_view name) const {
  return find_named(parameters, name);
}

const Observable* BioPepaSystem::find_observable(std::string_view name) const {
  return find_named(observables, name);
}

std::vector<SpeciesLeaf> flatten_leaves(const BioPepaSystem& system, const ModelTree& tree) {
  std::vector<SpeciesLeaf> leaves;
  std::vector<std::string> active;
  std::function<void(const ModelTree&)> walk = [&](const ModelTree& node) {
    if (!node) return;
    if (const auto* leaf = std::get_if<SpeciesLeaf>(&node->data)) {
      leaves.push_back(*leaf);
    } else if (const auto* ref = std::get_if<CompositionRef>(&node->data)) {
      const auto* comp = system.find_composition(ref->name);
      if (!comp || std::find(active.begin(), active.end(), ref->name) != active.end()) return;
      active.push_back(ref->name);
      walk(comp->body);
      active.pop_back();
    } else {
      const auto& coop = std::get<Cooperation>(node->data);
      walk(coop.lhs);
      walk(coop.rhs);
    }
  };
  walk(tree);
  return leaves;
}

namespace {

bool equal_trees(const ModelTree& a, const ModelTree& b) {
  if (!a || !b) return !a && !b;
  if (a->data.index() != b->data.index()) return false;
  if (const auto* la = std::get_if<SpeciesLeaf>(&a->data)) {
    const auto& lb = std::get<SpeciesLeaf>(b->data);
    return la->species == lb.species && la->location == lb.location &&
           la->initial == lb.initial;
  }
  if (const auto* ra = std::get_if<CompositionRef>(&a->data)) {
    return ra->name == std::get<CompositionRef>(b->data).name;
  }
  const auto& ca = std::get<Cooperation>(a->data);
  const auto& cb = std::get<Cooperation>(b->data);
  return ca.set.wildcard == cb.set.wildcard && ca.set.actions == cb.set.actions &&
         equal_trees(ca.lhs, cb.lhs) && equal_trees(ca.rhs, cb.rhs);
}

bool equal_laws(const KineticLaw& a, const KineticLaw& b) {
  if (a.action != b.action || a.body.index() != b.body.index()) return false;
  if (const auto* ma = std::get_if<MassAction>(&a.body)) {
    return structurally_equal(ma->rate, std::get<MassAction>(b.body).rate);
  }
  if (const auto* mm = std::get_if<MichaelisMenten>(&a.body)) {
    const auto& o = std::get<MichaelisMenten>(b.body);
    return structurally_equal(mm->v_max, o.v_max) && structurally_equal(mm->k_m, o.k_m);
  }
  return structurally_equal(std::get<CustomLaw>(a.body).body,
                            std::get<CustomLaw>(b.body).body);
}

bool equal_terms(const PrefixTerm& a, const PrefixTerm& b) {
  return a.action == b.action && a.stoichiometry == b.stoichiometry && a.role == b.role &&
         a.species == b.species && a.location == b.location &&
         a.destination == b.destination;
}

template <class T, class Eq>
bool equal_lists(const std::vector<T>& a, const std::vector<T>& b, Eq eq) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), eq);
}

}  // namespace

bool structurally_equal(const BioPepaSystem& a, const BioPepaSystem& b) {
  auto loc_eq = [](const Location& x, const Location& y) {
    return x.name == y.name && structurally_equal(x.size, y.size) && x.unit == y.unit &&
           x.kind == y.kind && x.parent == y.parent;
  };
  auto param_eq = [](const Parameter& x, const Parameter& y) {
    return x.name == y.name && structurally_equal(x.value, y.value);
  };
  auto comp_eq = [](const SpeciesComponent& x, const SpeciesComponent& y) {
    return x.name == y.name && equal_lists(x.terms, y.terms, equal_terms);
  };
  auto lab_eq = [](const LabeledComposition& x, const LabeledComposition& y) {
    return x.name == y.name && equal_trees(x.body, y.body);
  };
  auto obs_eq = [](const Observable& x, const Observable& y) {
    return x.name == y.name && structurally_equal(x.body, y.body);
  };
  return equal_lists(a.locations, b.locations, loc_eq) && a.species_info == b.species_info &&
         equal_lists(a.parameters, b.parameters, param_eq) &&
         equal_lists(a.kinetic_laws, b.kinetic_laws, equal_laws) &&
         equal_lists(a.components, b.components, comp_eq) &&
         equal_lists(a.compositions, b.compositions, lab_eq) &&
         equal_trees(a.model, b.model) && equal_lists(a.observables, b.observables, obs_eq);
}

}  // namespace biopepa
