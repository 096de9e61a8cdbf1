#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "biopepa/analyzer.hpp"
#include "biopepa/kinetics.hpp"

namespace biopepa {

/// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  /// Independent substream for run `run` of an ensemble seeded with `master`.
  static Rng for_run(std::uint64_t master, std::uint64_t run);

  std::uint64_t next();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

 private:
  std::uint64_t s_[4];
};

/// Inverse CDF: -ln(u) / rate for u in (0, 1].
double sample_exponential(double rate, double u);
double sample_exponential(double rate, Rng& rng);
/// Multiplication method below mean 30, PTRS rejection above.
std::int64_t sample_poisson(double mean, Rng& rng);

/// Network prepared for the stochastic simulators.
struct StochasticModel {
  struct Change {
    std::size_t species;
    std::int64_t delta;
  };
  std::size_t species = 0;
  std::vector<RateFunction> rates;
  std::vector<std::vector<Change>> changes;  // per reaction
  /// dependents[k]: reactions whose rate reads a species that reaction k
  /// changes (includes k itself when it reads what it changes).
  std::vector<std::vector<std::size_t>> dependents;
  bool time_dependent = false;
};

StochasticModel build_stochastic_model(const ReactionNetwork& network,
                                       std::vector<RateFunction> rates);

struct Event {
  double time;
  std::size_t reaction;
};

/// Integer state sampled on a uniform grid (last value held), plus the
/// event log when requested.
struct StochasticTrajectory {
  std::vector<double> times;
  std::vector<std::vector<std::int64_t>> states;
  std::vector<Event> events;
  std::size_t event_count = 0;
};

struct StochasticOptions {
  double t_end = 1.0;
  std::size_t points = 2;
  bool record_events = false;
  double tau = 0.01;  // tau-leaping only
};

StochasticTrajectory simulate_direct(const StochasticModel& model,
                                     const std::vector<std::int64_t>& x0,
                                     const StochasticOptions& options, Rng& rng);
StochasticTrajectory simulate_next_reaction(const StochasticModel& model,
                                            const std::vector<std::int64_t>& x0,
                                            const StochasticOptions& options, Rng& rng);
StochasticTrajectory simulate_tau_leap(const StochasticModel& model,
                                       const std::vector<std::int64_t>& x0,
                                       const StochasticOptions& options, Rng& rng);

enum class StochasticMethod { Direct, NextReaction, TauLeap };

struct EnsembleOptions {
  StochasticMethod method = StochasticMethod::Direct;
  StochasticOptions run;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Per-point statistics over independent runs. Columns are the species in
/// network order followed by the observables. Observable values are
/// computed per run; runs where an observable is undefined (division by
/// zero) are left out of that cell, and `undefined[p][c]` counts them.
struct Ensemble {
  std::vector<double> times;
  std::vector<std::vector<double>> mean;    // [point][column]
  std::vector<std::vector<double>> stddev;  // sample standard deviation
  std::vector<std::vector<std::size_t>> undefined;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
};

/// Runs are reduced in run-index order, so results do not depend on the
/// thread count.
Ensemble run_ensemble(const StochasticModel& model, const std::vector<std::int64_t>& x0,
                      const EnsembleOptions& options,
                      const std::vector<CompiledExpr>& observables = {});

}  // namespace biopepa
