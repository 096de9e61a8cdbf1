#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biopepa/analyzer.hpp"
#include "biopepa/kinetics.hpp"
#include "biopepa/ode.hpp"

namespace biopepa {

enum class Method { OdeRk4, OdeDopri, Ssa, Nrm, Tau };

std::optional<Method> parse_method(std::string_view name);
std::string_view method_name(Method method) noexcept;
bool is_stochastic(Method method) noexcept;

struct RunConfig {
  std::string input;
  Method method = Method::OdeDopri;
  double stop = 0.0;
  std::size_t points = 2;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  double step = 0.01;
  double rtol = 1e-6;
  double atol = 1e-9;
  double tau = 0.01;
  std::vector<std::pair<std::string, double>> overrides;
  std::vector<std::string> selection;  // empty: all species and observables
  std::string output;                  // empty: standard output
  unsigned threads = 0;
};

/// Throws Error(InvalidArgument) for out-of-range settings.
void validate(const RunConfig& config);

/// Replaces resolved values; dependent parameters keep their base values.
/// Throws Error(UnknownOverride).
ParameterValues apply_overrides(const ParameterValues& resolved,
                                const std::vector<std::pair<std::string, double>>& overrides);

/// Parses `NAME=VALUE`. Throws Error(InvalidArgument).
std::pair<std::string, double> parse_override(std::string_view text);

/// Observable values per grid point ([point][observable]). An undefined
/// value (division by zero) becomes NaN; each affected observable gets one
/// warning line.
struct ObservableValues {
  std::vector<std::vector<double>> values;
  std::vector<std::string> warnings;
};
ObservableValues eval_observables(const ReactionNetwork& network, const ParameterValues& params,
                                  const TimeSeries& series);

/// Simulation result over all columns: species (network order) followed by
/// observables. `stddev` is filled for stochastic methods only.
struct SimulationOutput {
  std::vector<std::string> columns;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // mean for stochastic methods
  std::vector<std::vector<double>> stddev;
  bool ensemble = false;
  std::vector<std::string> warnings;

  std::optional<std::size_t> column(std::string_view name) const;
};

/// Runs the configured back-end. Overrides are applied to the resolved
/// parameters before rates are bound.
SimulationOutput run_simulation(const ReactionNetwork& network, const RunConfig& config);

/// CSV with a `time` column, then the selected columns (or `name:mean`,
/// `name:std` pairs for ensembles). Numbers use up to 9 significant
/// digits; NaN is written as an empty cell. Throws Error(UnknownSelection).
void write_csv(const SimulationOutput& output, const std::vector<std::string>& selection,
               std::ostream& out);

/// Parse + analyze a document.
struct LoadedModel {
  std::optional<BioPepaSystem> system;
  std::optional<ReactionNetwork> network;
  std::vector<Diagnostic> diagnostics;

  bool ok() const noexcept { return network.has_value(); }
};
LoadedModel load_model(std::string_view text);

/// Reads a whole file. Throws Error(Io).
std::string read_file(const std::string& path);

/// Exit codes: 0 no errors, 1 static errors, 2 I/O failure.
int cmd_check(const std::string& path, std::ostream& err);

/// Exit codes: 0 success, 1 static errors, 2 runtime, numeric or I/O errors.
/// CSV goes to `out` unless config.output names a file.
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace biopepa
