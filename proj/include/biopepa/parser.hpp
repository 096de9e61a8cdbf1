#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biopepa/expression.hpp"
#include "biopepa/model.hpp"

namespace biopepa {

enum class Severity { Error, Warning };

std::string_view severity_name(Severity severity) noexcept;

struct ParseDiagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceSpan span;
};

/// `system` is present iff no diagnostic has Error severity.
struct ParseResult {
  std::optional<BioPepaSystem> system;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const noexcept { return system.has_value(); }
};

struct ExpressionParseResult {
  std::optional<Expression> expression;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const noexcept { return expression.has_value(); }
};

/// Parses a complete model document. Never throws on malformed input;
/// recovery is per statement (each `;`-terminated definition is parsed
/// independently).
ParseResult parse_system(std::string_view text);

/// Parses a standalone arithmetic fragment. `name@loc` becomes a
/// species-amount reference; other identifiers stay unresolved.
ExpressionParseResult parse_expression(std::string_view text);

}  // namespace biopepa
