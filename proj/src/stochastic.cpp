#include "biopepa/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "biopepa/error.hpp"
#include "biopepa/indexed_heap.hpp"
#include "biopepa/ode.hpp"

namespace biopepa {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Shared state bookkeeping for all three methods.
class Runner {
 public:
  Runner(const StochasticModel& model, const std::vector<std::int64_t>& x0,
         const StochasticOptions& options)
      : model_(model), opt_(options), x_(x0), xd_(x0.begin(), x0.end()) {
    if (x0.size() != model.species) {
      throw Error(ErrorCode::InvalidArgument, "initial state has wrong dimension");
    }
    if (!(options.t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "stop time must be > 0");
    if (options.points < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 points");
    for (auto v : x0) {
      if (v < 0) throw Error(ErrorCode::InvalidArgument, "initial counts must be nonnegative");
    }
    traj_.times = uniform_grid(0.0, options.t_end, options.points);
    traj_.states.reserve(options.points);
  }

  double propensity(std::size_t j, double t) const {
    double a = model_.rates[j](xd_.data(), t);
    if (!(a >= 0.0)) {
      throw Error(ErrorCode::NegativePropensity,
                  "propensity of " + model_.rates[j].action() + " is " + format_number(a) +
                      " at t=" + format_number(t));
    }
    return a;
  }

  /// Records every grid point strictly before t (state held since the
  /// previous event).
  void hold_until(double t) {
    while (traj_.states.size() < traj_.times.size() && traj_.times[traj_.states.size()] < t) {
      traj_.states.push_back(x_);
    }
  }
  void hold_to_end() {
    while (traj_.states.size() < traj_.times.size()) traj_.states.push_back(x_);
  }

  void fire(std::size_t j, double t, std::int64_t times = 1) {
    for (const auto& c : model_.changes[j]) {
      x_[c.species] += c.delta * times;
      xd_[c.species] = static_cast<double>(x_[c.species]);
    }
    traj_.event_count += static_cast<std::size_t>(times);
    if (opt_.record_events) {
      for (std::int64_t i = 0; i < times; ++i) traj_.events.push_back({t, j});
    }
  }

  StochasticTrajectory finish() { return std::move(traj_); }

  const StochasticModel& model_;
  const StochasticOptions& opt_;
  std::vector<std::int64_t> x_;
  std::vector<double> xd_;
  StochasticTrajectory traj_;
};

std::size_t select_reaction(const std::vector<double>& a, double a0, double u) {
  double target = u * a0;
  double cum = 0.0;
  std::size_t last_positive = a.size();
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] <= 0.0) continue;
    cum += a[j];
    last_positive = j;
    if (target < cum) return j;
  }
  return last_positive;  // rounding at the top end
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

Rng Rng::for_run(std::uint64_t master, std::uint64_t run) {
  std::uint64_t x = master;
  std::uint64_t a = splitmix64(x);
  std::uint64_t y = run ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t b = splitmix64(y);
  return Rng(a ^ rotl(b, 17) ^ (run * 0xd1342543de82ef95ULL));
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double sample_exponential(double rate, double u) { return -std::log(u) / rate; }

double sample_exponential(double rate, Rng& rng) {
  return sample_exponential(rate, rng.uniform_pos());
}

std::int64_t sample_poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2);
  for (;;) {
    double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

StochasticModel build_stochastic_model(const ReactionNetwork& network,
                                       std::vector<RateFunction> rates) {
  StochasticModel m;
  m.species = network.species.size();
  m.rates = std::move(rates);
  const std::size_t nr = network.reactions.size();
  m.changes.resize(nr);
  for (std::size_t j = 0; j < nr; ++j) {
    for (std::size_t i = 0; i < m.species; ++i) {
      if (int s = network.stoichiometry[j][i]) m.changes[j].push_back({i, s});
    }
  }
  std::vector<std::vector<std::size_t>> readers(m.species);
  for (std::size_t j = 0; j < nr; ++j) {
    for (std::size_t i : m.rates[j].reads()) readers[i].push_back(j);
    m.time_dependent |= m.rates[j].depends_on_time();
  }
  m.dependents.resize(nr);
  for (std::size_t k = 0; k < nr; ++k) {
    auto& dep = m.dependents[k];
    for (const auto& c : m.changes[k]) {
      dep.insert(dep.end(), readers[c.species].begin(), readers[c.species].end());
    }
    std::sort(dep.begin(), dep.end());
    dep.erase(std::unique(dep.begin(), dep.end()), dep.end());
  }
  return m;
}

StochasticTrajectory simulate_direct(const StochasticModel& model,
                                     const std::vector<std::int64_t>& x0,
                                     const StochasticOptions& options, Rng& rng) {
  Runner run(model, x0, options);
  const std::size_t nr = model.rates.size();
  std::vector<double> a(nr);
  double t = 0.0;
  for (std::size_t j = 0; j < nr; ++j) a[j] = run.propensity(j, t);
  for (;;) {
    double a0 = 0.0;
    for (double v : a) a0 += v;
    if (a0 <= 0.0) break;
    double t_next = t + sample_exponential(a0, rng);
    if (t_next > options.t_end) break;
    std::size_t j = select_reaction(a, a0, rng.uniform());
    run.hold_until(t_next);
    t = t_next;
    run.fire(j, t);
    if (model.time_dependent) {
      for (std::size_t k = 0; k < nr; ++k) a[k] = run.propensity(k, t);
    } else {
      for (std::size_t k : model.dependents[j]) a[k] = run.propensity(k, t);
    }
  }
  run.hold_to_end();
  return run.finish();
}

StochasticTrajectory simulate_next_reaction(const StochasticModel& model,
                                            const std::vector<std::int64_t>& x0,
                                            const StochasticOptions& options, Rng& rng) {
  Runner run(model, x0, options);
  const std::size_t nr = model.rates.size();
  std::vector<double> a(nr), tau(nr);
  double t = 0.0;
  for (std::size_t j = 0; j < nr; ++j) {
    a[j] = run.propensity(j, t);
    tau[j] = a[j] > 0.0 ? sample_exponential(a[j], rng) : kInf;
  }
  if (nr == 0) {
    run.hold_to_end();
    return run.finish();
  }
  IndexedMinHeap heap(tau);
  std::vector<std::size_t> all(nr);
  for (std::size_t j = 0; j < nr; ++j) all[j] = j;
  for (;;) {
    std::size_t j = heap.top();
    double t_next = heap.top_value();
    if (!(t_next <= options.t_end)) break;
    run.hold_until(t_next);
    t = t_next;
    run.fire(j, t);
    const auto& deps = model.time_dependent ? all : model.dependents[j];
    bool fired_updated = false;
    for (std::size_t k : deps) {
      double a_new = run.propensity(k, t);
      double tk;
      if (k == j) {
        tk = a_new > 0.0 ? t + sample_exponential(a_new, rng) : kInf;
        fired_updated = true;
      } else if (a_new <= 0.0) {
        tk = kInf;
      } else if (a[k] > 0.0 && std::isfinite(heap.value(k))) {
        tk = t + (a[k] / a_new) * (heap.value(k) - t);
      } else {
        tk = t + sample_exponential(a_new, rng);
      }
      a[k] = a_new;
      heap.update(k, tk);
    }
    if (!fired_updated) {
      heap.update(j, a[j] > 0.0 ? t + sample_exponential(a[j], rng) : kInf);
    }
  }
  run.hold_to_end();
  return run.finish();
}

StochasticTrajectory simulate_tau_leap(const StochasticModel& model,
                                       const std::vector<std::int64_t>& x0,
                                       const StochasticOptions& options, Rng& rng) {
  if (!(options.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  Runner run(model, x0, options);
  const std::size_t nr = model.rates.size();
  const double tau_min = 1e-6 * options.tau;
  std::vector<double> a(nr);
  std::vector<std::int64_t> k(nr), trial;
  const auto& grid = run.traj_.times;
  std::size_t next_grid = 1;
  run.traj_.states.push_back(run.x_);
  double t = 0.0;

  auto propensities = [&] {
    double a0 = 0.0;
    for (std::size_t j = 0; j < nr; ++j) a0 += (a[j] = run.propensity(j, t));
    return a0;
  };

  while (next_grid < grid.size()) {
    const double stop = grid[next_grid];
    double a0 = propensities();
    if (a0 <= 0.0) {
      run.hold_to_end();
      break;
    }
    double leap = std::min(options.tau, stop - t);
    bool leaped = false;
    while (leap >= tau_min) {
      trial = run.x_;
      for (std::size_t j = 0; j < nr; ++j) {
        k[j] = sample_poisson(a[j] * leap, rng);
        if (k[j] == 0) continue;
        for (const auto& c : model.changes[j]) trial[c.species] += c.delta * k[j];
      }
      if (std::all_of(trial.begin(), trial.end(), [](std::int64_t v) { return v >= 0; })) {
        double t_new = (leap == stop - t) ? stop : t + leap;
        for (std::size_t j = 0; j < nr; ++j) {
          if (k[j]) run.fire(j, t_new, k[j]);
        }
        t = t_new;
        leaped = true;
        break;
      }
      leap *= 0.5;
    }
    if (!leaped) {
      // One exact step (or none, if the next event falls past the grid point).
      double t_next = t + sample_exponential(a0, rng);
      if (t_next >= stop) {
        t = stop;
      } else {
        std::size_t j = select_reaction(a, a0, rng.uniform());
        t = t_next;
        run.fire(j, t);
      }
    }
    if (t >= stop) {
      run.traj_.states.push_back(run.x_);
      ++next_grid;
    }
  }
  run.hold_to_end();
  return run.finish();
}

Ensemble run_ensemble(const StochasticModel& model, const std::vector<std::int64_t>& x0,
                      const EnsembleOptions& options,
                      const std::vector<CompiledExpr>& observables) {
  if (options.runs < 1) throw Error(ErrorCode::InvalidArgument, "at least one run is required");
  const std::size_t points = options.run.points;
  const std::size_t ns = model.species;
  const std::size_t cols = ns + observables.size();

  // values[run][point][column]; NaN marks an undefined observable.
  std::vector<std::vector<std::vector<double>>> values(options.runs);
  std::vector<double> grid;

  auto one_run = [&](std::size_t r) {
    Rng rng = Rng::for_run(options.seed, r);
    StochasticTrajectory tr;
    switch (options.method) {
      case StochasticMethod::Direct: tr = simulate_direct(model, x0, options.run, rng); break;
      case StochasticMethod::NextReaction:
        tr = simulate_next_reaction(model, x0, options.run, rng);
        break;
      case StochasticMethod::TauLeap: tr = simulate_tau_leap(model, x0, options.run, rng); break;
    }
    auto& out = values[r];
    out.assign(points, std::vector<double>(cols));
    std::vector<double> xd(ns);
    for (std::size_t p = 0; p < points; ++p) {
      for (std::size_t i = 0; i < ns; ++i) out[p][i] = xd[i] = double(tr.states[p][i]);
      for (std::size_t o = 0; o < observables.size(); ++o) {
        double v;
        try {
          v = observables[o](xd.data(), tr.times[p]);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DivisionByZero) throw;
          v = std::numeric_limits<double>::quiet_NaN();
        }
        out[p][ns + o] = v;
      }
    }
    if (r == 0) grid = tr.times;
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(options.runs)));
  if (threads == 1) {
    for (std::size_t r = 0; r < options.runs; ++r) one_run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t r = next.fetch_add(1);
          if (r >= options.runs) return;
          try {
            one_run(r);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = options.runs;
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  Ensemble e;
  e.times = grid;
  e.runs = options.runs;
  e.seed = options.seed;
  e.mean.assign(points, std::vector<double>(cols, 0.0));
  e.stddev.assign(points, std::vector<double>(cols, 0.0));
  e.undefined.assign(points, std::vector<std::size_t>(cols, 0));
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t c = 0; c < cols; ++c) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < options.runs; ++r) {
        double v = values[r][p][c];
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
      }
      e.undefined[p][c] = options.runs - n;
      if (n == 0) {
        e.mean[p][c] = e.stddev[p][c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double mean = sum / double(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < options.runs; ++r) {
        double v = values[r][p][c];
        if (!std::isnan(v)) ss += (v - mean) * (v - mean);
      }
      e.mean[p][c] = mean;
      e.stddev[p][c] = n > 1 ? std::sqrt(ss / double(n - 1)) : 0.0;
    }
  }
  return e;
}

}  // namespace biopepa
