#pragma once

#include <string>
#include <string_view>

namespace biopepa {

/// Identifiers that denote simulation time when not shadowed by a parameter.
inline bool is_time_variable(std::string_view name) { return name == "t" || name == "time"; }

/// `species@location`, or just `species` for location-free models.
inline std::string qualified_name(std::string_view species, std::string_view location) {
  std::string out(species);
  if (!location.empty()) {
    out += '@';
    out.append(location);
  }
  return out;
}

}  // namespace biopepa
