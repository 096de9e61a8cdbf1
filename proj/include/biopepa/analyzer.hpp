#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biopepa/model.hpp"
#include "biopepa/parser.hpp"

namespace biopepa {

/// Static-analysis finding. `code` is a stable SCREAMING_SNAKE identifier
/// such as MM_ROLE_MISMATCH or NON_ADJACENT_REACTION.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  SourceSpan span;
};

/// `SEVERITY CODE file:line:col message`
std::string format_diagnostic(const Diagnostic& d, std::string_view file);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

struct Participant {
  std::string species;
  std::string location;
  int stoichiometry = 1;
  std::size_t index = 0;  // column in the network's species index
};

/// All prefix terms of one action, flattened over the instantiated species.
struct Reaction {
  std::string action;
  std::vector<Participant> reactants;
  std::vector<Participant> products;
  std::vector<Participant> activators;
  std::vector<Participant> inhibitors;
  std::vector<Participant> modifiers;
  KineticLaw law;  // expressions carry resolved reference kinds
};

struct SpeciesInstance {
  std::string species;
  std::string location;
};

/// Flat network plus the resolved context needed to evaluate it.
struct ReactionNetwork {
  std::vector<SpeciesInstance> species;
  std::vector<Reaction> reactions;
  std::vector<std::vector<int>> stoichiometry;  // [reaction][species]
  std::vector<std::int64_t> initial_state;

  LocationTree locations;
  std::vector<Parameter> parameters;
  std::vector<Observable> observables;

  std::optional<std::size_t> species_index(std::string_view species,
                                           std::string_view location) const;
  std::optional<std::size_t> reaction_index(std::string_view action) const;
  std::string species_name(std::size_t index) const;
};

struct ExpansionResult {
  BioPepaSystem system;
  std::vector<Diagnostic> diagnostics;
};

/// Gives every prefix term an explicit location. An unqualified term of
/// species S is replicated once per location where S is instantiated in the
/// model component; UNRESOLVED_LOCATION when S is not instantiated at all.
ExpansionResult expand_location_shorthand(const BioPepaSystem& system);

/// Static checks over an expanded system. Errors block simulation;
/// warnings do not.
std::vector<Diagnostic> check_system(const BioPepaSystem& system);

/// One reaction per kinetic law (declaration order); species ordered by
/// the model component left to right. Precondition: check_system reported
/// no errors (violations throw std::logic_error).
ReactionNetwork derive_reaction_network(const BioPepaSystem& system);

/// Nonnegative integer vectors m with S m = 0 (S = stoichiometry matrix),
/// taken from an exact rational null-space basis; mixed-sign basis vectors
/// are dropped. Networks above 10,000 matrix entries are skipped.
std::vector<std::vector<std::int64_t>> conserved_moieties(const ReactionNetwork& network);

struct AnalysisResult {
  std::optional<ReactionNetwork> network;  // present iff no errors
  std::vector<Diagnostic> diagnostics;

  bool ok() const noexcept { return network.has_value(); }
};

/// expand_location_shorthand + check_system + derive_reaction_network.
AnalysisResult analyze(const BioPepaSystem& system);

/// Parse diagnostics in the analyzer format (code SYNTAX_ERROR).
std::vector<Diagnostic> to_diagnostics(const std::vector<ParseDiagnostic>& parse);

}  // namespace biopepa
