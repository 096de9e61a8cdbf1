#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "biopepa/expression.hpp"

namespace biopepa {

enum class LocationKind { Compartment, Membrane };

/// A named compartment (volume) or membrane (surface area).
struct Location {
  std::string name;
  Expression size;
  std::string unit;  // annotation only; never interpreted
  LocationKind kind = LocationKind::Compartment;
  std::optional<std::string> parent;
  SourceSpan span;
};

/// Parameter values keyed by name.
using ParameterValues = std::map<std::string, double, std::less<>>;

/// Static containment forest over locations.
class LocationTree {
 public:
  LocationTree() = default;

  const std::vector<Location>& locations() const noexcept { return locations_; }
  bool empty() const noexcept { return locations_.empty(); }
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  const Location* find(std::string_view name) const;
  const Location& at(std::string_view name) const;

  std::optional<std::string> parent_of(std::string_view name) const;
  std::vector<std::string> children_of(std::string_view name) const;
  std::vector<std::string> roots() const;

  /// True when one is the parent of the other or both share a parent.
  /// A location is adjacent to itself.
  bool adjacent(std::string_view a, std::string_view b) const;

 private:
  friend LocationTree build_location_tree(std::vector<Location> locations);
  std::optional<std::size_t> index_of(std::string_view name) const;

  std::vector<Location> locations_;
  std::vector<std::optional<std::size_t>> parent_;
};

/// Throws Error with DuplicateLocation, UnknownParent or CyclicHierarchy.
LocationTree build_location_tree(std::vector<Location> locations);

/// Size of `name` at time t. Size expressions may reference parameters and
/// the time variable. Throws UnknownLocation or NonpositiveSize.
double location_size_at(const LocationTree& tree, std::string_view name, double t,
                        const ParameterValues& params);

struct Parameter {
  std::string name;
  Expression value;
  SourceSpan span;
};

struct MassAction {
  Expression rate;
};

struct MichaelisMenten {
  Expression v_max;
  Expression k_m;
};

struct CustomLaw {
  Expression body;
};

struct KineticLaw {
  std::string action;
  std::variant<MassAction, MichaelisMenten, CustomLaw> body;
  SourceSpan span;
};

enum class Role { Reactant, Product, Activator, Inhibitor, Modifier, TransportOut };

std::string_view role_name(Role role) noexcept;

/// One `(action, stoichiometry) op Species@location` alternative.
struct PrefixTerm {
  std::string action;
  int stoichiometry = 1;
  Role role = Role::Reactant;
  std::string species;      // target as written; must match the component name
  std::string location;     // empty when unqualified
  std::string destination;  // TransportOut only
  SourceSpan span;
};

struct SpeciesComponent {
  std::string name;
  std::vector<PrefixTerm> terms;
  SourceSpan span;
};

struct CooperationSet {
  bool wildcard = true;
  std::vector<std::string> actions;
};

struct ModelNode;
using ModelTree = std::shared_ptr<const ModelNode>;

struct SpeciesLeaf {
  std::string species;
  std::string location;
  double initial = 0.0;  // validated to a nonnegative integer by the analyzer
};

struct CompositionRef {
  std::string name;
};

struct Cooperation {
  ModelTree lhs;
  ModelTree rhs;
  CooperationSet set;
};

struct ModelNode {
  std::variant<SpeciesLeaf, CompositionRef, Cooperation> data;
  SourceSpan span;
};

ModelTree make_leaf(std::string species, std::string location, double initial,
                    SourceSpan span = {});
ModelTree make_ref(std::string name, SourceSpan span = {});
ModelTree make_cooperation(ModelTree lhs, ModelTree rhs, CooperationSet set,
                           SourceSpan span = {});

/// `name ::= composition;`
struct LabeledComposition {
  std::string name;
  ModelTree body;
  SourceSpan span;
};

struct Observable {
  std::string name;
  Expression body;
  SourceSpan span;
};

/// Locations, species info, parameters, functional rates, species
/// components and the model component, plus labeled compositions and
/// observables. Definitions are kept in source order; duplicates survive
/// parsing so the analyzer can report them.
struct BioPepaSystem {
  std::vector<Location> locations;
  std::map<std::string, std::string> species_info;  // opaque annotations
  std::vector<Parameter> parameters;
  std::vector<KineticLaw> kinetic_laws;
  std::vector<SpeciesComponent> components;
  std::vector<LabeledComposition> compositions;
  ModelTree model;
  std::vector<Observable> observables;

  const KineticLaw* find_law(std::string_view action) const;
  const SpeciesComponent* find_component(std::string_view name) const;
  const LabeledComposition* find_composition(std::string_view name) const;
  const Parameter* find_parameter(std::string_view name) const;
  const Observable* find_observable(std::string_view name) const;
};

/// Species leaves of a model tree in left-to-right order with labeled
/// compositions inlined. Unknown or cyclic references are skipped.
std::vector<SpeciesLeaf> flatten_leaves(const BioPepaSystem& system, const ModelTree& tree);

/// Structural equality ignoring source spans.
bool structurally_equal(const BioPepaSystem& a, const BioPepaSystem& b);

/// Renders a system in the concrete model syntax; parsing the result
/// yields a structurally equal system.
std::string pretty_print(const BioPepaSystem& system);

}  // namespace biopepa
