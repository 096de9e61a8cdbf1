#include "biopepa/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "biopepa/error.hpp"
#include "biopepa/parser.hpp"
#include "biopepa/stochastic.hpp"

namespace biopepa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_cell(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string undefined_warning(const std::string& name, std::size_t count, double first) {
  return "observable " + name + " is undefined (division by zero) at " + std::to_string(count) +
         " point(s), first at t=" + format_cell(first);
}

}  // namespace

std::optional<Method> parse_method(std::string_view name) {
  if (name == "ode-rk4") return Method::OdeRk4;
  if (name == "ode-dopri") return Method::OdeDopri;
  if (name == "ssa") return Method::Ssa;
  if (name == "nrm") return Method::Nrm;
  if (name == "tau") return Method::Tau;
  return std::nullopt;
}

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::OdeRk4: return "ode-rk4";
    case Method::OdeDopri: return "ode-dopri";
    case Method::Ssa: return "ssa";
    case Method::Nrm: return "nrm";
    case Method::Tau: return "tau";
  }
  return "?";
}

bool is_stochastic(Method method) noexcept {
  return method == Method::Ssa || method == Method::Nrm || method == Method::Tau;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (!(c.stop > 0.0) || !std::isfinite(c.stop)) fail("--stop must be a positive number");
  if (c.points < 2) fail("--points must be at least 2");
  if (c.runs < 1) fail("--runs must be at least 1");
  if (!(c.step > 0.0)) fail("--step must be positive");
  if (!(c.rtol > 0.0) || !(c.atol > 0.0)) fail("--rtol and --atol must be positive");
  if (!(c.tau > 0.0)) fail("--tau must be positive");
}

ParameterValues apply_overrides(const ParameterValues& resolved,
                                const std::vector<std::pair<std::string, double>>& overrides) {
  ParameterValues out = resolved;
  for (const auto& [name, value] : overrides) {
    auto it = out.find(name);
    if (it == out.end()) {
      throw Error(ErrorCode::UnknownOverride, "--set names unknown parameter '" + name + "'");
    }
    it->second = value;
  }
  return out;
}

std::pair<std::string, double> parse_override(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::InvalidArgument, "override must look like NAME=VALUE: " +
                                                std::string(text));
  }
  std::string name(text.substr(0, eq));
  std::string value(text.substr(eq + 1));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, "override value is not a number: " + value);
  }
  return {name, v};
}

ObservableValues eval_observables(const ReactionNetwork& network, const ParameterValues& params,
                                  const TimeSeries& series) {
  auto compiled = compile_observables(network, params);
  ObservableValues out;
  out.values.assign(series.times.size(), std::vector<double>(compiled.size()));
  for (std::size_t o = 0; o < compiled.size(); ++o) {
    std::size_t undefined = 0;
    double first = 0.0;
    for (std::size_t p = 0; p < series.times.size(); ++p) {
      double v;
      try {
        v = compiled[o](series.states[p].data(), series.times[p]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DivisionByZero) throw;
        if (undefined++ == 0) first = series.times[p];
        v = kNaN;
      }
      out.values[p][o] = v;
    }
    if (undefined) {
      out.warnings.push_back(undefined_warning(network.observables[o].name, undefined, first));
    }
  }
  return out;
}

std::optional<std::size_t> SimulationOutput::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

SimulationOutput run_simulation(const ReactionNetwork& network, const RunConfig& config) {
  validate(config);
  ParameterValues params = apply_overrides(resolve_parameters(network.parameters),
                                           config.overrides);
  auto rates = bind_rates(network, params);

  SimulationOutput out;
  for (std::size_t i = 0; i < network.species.size(); ++i) {
    out.columns.push_back(network.species_name(i));
  }
  for (const auto& o : network.observables) out.columns.push_back(o.name);

  if (!is_stochastic(config.method)) {
    VectorField f = build_vector_field(network, rates);
    std::vector<double> x0(network.initial_state.begin(), network.initial_state.end());
    TimeSeries ts = config.method == Method::OdeRk4
                        ? integrate_rk4(f, x0, 0.0, config.stop, config.step, config.points)
                        : integrate_dopri(f, x0, 0.0, config.stop, config.rtol, config.atol,
                                          config.points);
    ObservableValues obs = eval_observables(network, params, ts);
    out.times = ts.times;
    out.values.resize(ts.times.size());
    for (std::size_t p = 0; p < ts.times.size(); ++p) {
      out.values[p] = ts.states[p];
      out.values[p].insert(out.values[p].end(), obs.values[p].begin(), obs.values[p].end());
    }
    out.warnings = std::move(obs.warnings);
    return out;
  }

  StochasticModel model = build_stochastic_model(network, std::move(rates));
  EnsembleOptions opt;
  opt.method = config.method == Method::Ssa   ? StochasticMethod::Direct
               : config.method == Method::Nrm ? StochasticMethod::NextReaction
                                              : StochasticMethod::TauLeap;
  opt.run.t_end = config.stop;
  opt.run.points = config.points;
  opt.run.tau = config.tau;
  opt.runs = config.runs;
  opt.seed = config.seed;
  opt.threads = config.threads;
  Ensemble e = run_ensemble(model, network.initial_state, opt, compile_observables(network, params));
  out.ensemble = true;
  out.times = e.times;
  out.values = e.mean;
  out.stddev = e.stddev;
  const std::size_t ns = network.species.size();
  for (std::size_t o = 0; o < network.observables.size(); ++o) {
    std::size_t undefined = 0;
    double first = 0.0;
    for (std::size_t p = 0; p < e.times.size(); ++p) {
      if (e.undefined[p][ns + o] && undefined++ == 0) first = e.times[p];
    }
    if (undefined) {
      out.warnings.push_back(undefined_warning(network.observables[o].name, undefined, first) +
                             " in some runs; those runs are left out of the statistics");
    }
  }
  return out;
}

void write_csv(const SimulationOutput& output, const std::vector<std::string>& selection,
               std::ostream& out) {
  std::vector<std::size_t> cols;
  if (selection.empty()) {
    for (std::size_t i = 0; i < output.columns.size(); ++i) cols.push_back(i);
  } else {
    for (const auto& name : selection) {
      auto c = output.column(name);
      if (!c) throw Error(ErrorCode::UnknownSelection, "unknown species or observable '" + name + "'");
      cols.push_back(*c);
    }
  }
  std::string text = "time";
  for (std::size_t c : cols) {
    if (output.ensemble) {
      text += ',' + output.columns[c] + ":mean," + output.columns[c] + ":std";
    } else {
      text += ',' + output.columns[c];
    }
  }
  text += '\n';
  for (std::size_t p = 0; p < output.times.size(); ++p) {
    text += format_cell(output.times[p]);
    for (std::size_t c : cols) {
      text += ',' + format_cell(output.values[p][c]);
      if (output.ensemble) text += ',' + format_cell(output.stddev[p][c]);
    }
    text += '\n';
  }
  out << text;
}

LoadedModel load_model(std::string_view text) {
  LoadedModel out;
  ParseResult parsed = parse_system(text);
  out.diagnostics = to_diagnostics(parsed.diagnostics);
  if (!parsed.ok()) return out;
  AnalysisResult analysis = analyze(*parsed.system);
  out.diagnostics.insert(out.diagnostics.end(), analysis.diagnostics.begin(),
                         analysis.diagnostics.end());
  out.system = std::move(parsed.system);
  out.network = std::move(analysis.network);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "error while reading '" + path + "'");
  return buf.str();
}

int cmd_check(const std::string& path, std::ostream& err) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    err << "error " << code_name(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  LoadedModel model = load_model(text);
  for (const auto& d : model.diagnostics) err << format_diagnostic(d, path) << '\n';
  return has_errors(model.diagnostics) ? 1 : 0;
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    std::string text = read_file(config.input);
    LoadedModel model = load_model(text);
    for (const auto& d : model.diagnostics) err << format_diagnostic(d, config.input) << '\n';
    if (!model.ok()) return 1;
    SimulationOutput result = run_simulation(*model.network, config);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    std::ostringstream csv;
    write_csv(result, config.selection, csv);
    if (config.output.empty()) {
      out << csv.str();
      out.flush();
    } else {
      std::ofstream file(config.output, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(ErrorCode::Io, "cannot write '" + config.output + "'");
      file << csv.str();
      file.close();
      if (!file) throw Error(ErrorCode::Io, "error while writing '" + config.output + "'");
    }
    return 0;
  } catch (const Error& e) {
    err << "error " << code_name(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error INTERNAL: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace biopepa
