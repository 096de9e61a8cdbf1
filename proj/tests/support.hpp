#pragma once

#include <string>
#include <string_view>

#include "biopepa/analyzer.hpp"
#include "biopepa/cli.hpp"
#include "biopepa/parser.hpp"
#include "doctest.h"

namespace testing {

inline biopepa::BioPepaSystem parse_ok(std::string_view text) {
  auto r = biopepa::parse_system(text);
  for (const auto& d : r.diagnostics) INFO(d.message);
  REQUIRE(r.ok());
  return *r.system;
}

inline biopepa::ReactionNetwork network_of(std::string_view text) {
  auto sys = parse_ok(text);
  auto a = biopepa::analyze(sys);
  for (const auto& d : a.diagnostics) INFO(d.code << ": " << d.message);
  REQUIRE(a.ok());
  return *a.network;
}

inline std::string corpus_text() { return biopepa::read_file(BIOPEPA_CORPUS); }

inline std::size_t count_code(const std::vector<biopepa::Diagnostic>& ds, std::string_view code) {
  std::size_t n = 0;
  for (const auto& d : ds) n += d.code == code;
  return n;
}

inline std::size_t count_errors(const std::vector<biopepa::Diagnostic>& ds) {
  std::size_t n = 0;
  for (const auto& d : ds) n += d.severity == biopepa::Severity::Error;
  return n;
}

/// Runs parse + analyze and returns every diagnostic.
inline std::vector<biopepa::Diagnostic> diagnose(std::string_view text) {
  return biopepa::load_model(text).diagnostics;
}

/// Single-compartment header used by small test models.
inline const char* kCell = "location cell : size = 1, kind = compartment;\n";

}  // namespace testing
