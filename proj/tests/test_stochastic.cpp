#include <cmath>
#include <numeric>

#include "biopepa/error.hpp"
#include "biopepa/indexed_heap.hpp"
#include "biopepa/stochastic.hpp"
#include "support.hpp"

using namespace biopepa;
using testing::kCell;
using testing::network_of;

namespace {

struct Prepared {
  ReactionNetwork network;
  StochasticModel model;
  std::vector<std::int64_t> x0;
};

Prepared prepare(std::string_view text) {
  Prepared p{network_of(text), {}, {}};
  auto params = resolve_parameters(p.network.parameters);
  p.model = build_stochastic_model(p.network, bind_rates(p.network, params));
  p.x0 = p.network.initial_state;
  return p;
}

std::string decay_model(int a0) {
  return std::string(kCell) + "k = 1;\nkineticLawOf a : fMA(k);\nA = a << A@cell;\nB = a >> B@cell;\n" +
         "A@cell[" + std::to_string(a0) + "] <*> B@cell[0]";
}

double mean_final(const Prepared& p, StochasticMethod method, std::size_t runs,
                  std::uint64_t seed, double* var = nullptr) {
  EnsembleOptions o;
  o.method = method;
  o.run.t_end = 1.0;
  o.run.points = 2;
  o.runs = runs;
  o.seed = seed;
  auto e = run_ensemble(p.model, p.x0, o);
  if (var) *var = e.stddev.back()[0] * e.stddev.back()[0];
  return e.mean.back()[0];
}

}  // namespace

TEST_SUITE("stochastic") {
  TEST_CASE("rng is reproducible and substreams differ") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    auto r0 = Rng::for_run(42, 0), r1 = Rng::for_run(42, 1), r0b = Rng::for_run(42, 0);
    auto v0 = r0.next();
    CHECK(v0 == r0b.next());
    CHECK(v0 != r1.next());
    Rng u(3);
    for (int i = 0; i < 10000; ++i) {
      double x = u.uniform();
      CHECK((x >= 0.0 && x < 1.0));
    }
  }

  TEST_CASE("exponential inverse cdf") {
    CHECK(sample_exponential(4.0, std::exp(-2.0)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sample_exponential(1.0, 1.0) == 0.0);
    Rng rng(9);
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += sample_exponential(2.0, rng);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("poisson samples") {
    Rng rng(5);
    CHECK(sample_poisson(0.0, rng) == 0);
    for (double mean : {4.0, 29.5, 30.5, 250.0}) {
      const int n = 100000;
      double s = 0, s2 = 0;
      for (int i = 0; i < n; ++i) {
        auto k = sample_poisson(mean, rng);
        CHECK(k >= 0);
        s += double(k);
        s2 += double(k) * double(k);
      }
      double m = s / n, v = s2 / n - m * m;
      CHECK(std::fabs(m - mean) < 5 * std::sqrt(mean / n));
      CHECK(v == doctest::Approx(mean).epsilon(0.03));
    }
  }

  TEST_CASE("indexed heap keeps order under updates") {
    IndexedMinHeap h({5, 3, 9, 3, 7});
    CHECK(h.valid());
    CHECK(h.top() == 1);  // ties break on the smaller key
    h.update(1, 10);
    CHECK(h.top() == 3);
    h.update(2, 0);
    CHECK(h.top() == 2);
    CHECK(h.top_value() == 0);
    Rng rng(1);
    std::vector<double> vals(64);
    for (auto& v : vals) v = rng.uniform();
    IndexedMinHeap big(vals);
    for (int i = 0; i < 2000; ++i) {
      auto k = rng.next() % vals.size();
      vals[k] = rng.uniform() < 0.1 ? INFINITY : rng.uniform();
      big.update(k, vals[k]);
      REQUIRE(big.valid());
      CHECK(big.top_value() == *std::min_element(vals.begin(), vals.end()));
    }
  }

  TEST_CASE("single-molecule conversion fires once") {
    auto p = prepare(decay_model(1));
    for (auto sim : {&simulate_direct, &simulate_next_reaction}) {
      StochasticOptions o{100.0, 11, true};
      Rng rng(3);
      auto tr = (*sim)(p.model, p.x0, o, rng);
      REQUIRE(tr.event_count == 1);
      REQUIRE(tr.events.size() == 1);
      CHECK(tr.events[0].reaction == 0);
      CHECK(tr.states.back() == std::vector<std::int64_t>{0, 1});
      CHECK(tr.times.size() == 11);
    }
  }

  TEST_CASE("first waiting time has the exponential mean") {
    auto p = prepare(decay_model(2));
    const int n = 20000;
    double direct = 0, nrm = 0;
    for (int i = 0; i < n; ++i) {
      StochasticOptions o{100.0, 2, true};
      auto r1 = Rng::for_run(17, i), r2 = Rng::for_run(18, i);
      direct += simulate_direct(p.model, p.x0, o, r1).events.at(0).time;
      nrm += simulate_next_reaction(p.model, p.x0, o, r2).events.at(0).time;
    }
    CHECK(direct / n == doctest::Approx(0.5).epsilon(0.03));
    CHECK(nrm / n == doctest::Approx(0.5).epsilon(0.03));
  }

  TEST_CASE("dependency graph of the bundled model") {
    auto net = network_of(testing::corpus_text());
    auto model = build_stochastic_model(net, bind_rates(net, resolve_parameters(net.parameters)));
    auto v20 = *net.reaction_index("v20");
    auto v27 = *net.reaction_index("v27");
    const auto& deps = model.dependents[v27];
    CHECK(std::find(deps.begin(), deps.end(), v20) != deps.end());
    CHECK_FALSE(model.time_dependent);
    for (std::size_t k = 0; k < model.dependents.size(); ++k) {
      for (const auto& c : model.changes[k]) {
        for (std::size_t j = 0; j < model.rates.size(); ++j) {
          const auto& reads = model.rates[j].reads();
          if (std::find(reads.begin(), reads.end(), c.species) == reads.end()) continue;
          const auto& dk = model.dependents[k];
          CHECK(std::find(dk.begin(), dk.end(), j) != dk.end());
        }
      }
    }
  }

  TEST_CASE("direct and next-reaction agree on decay") {
    auto p = prepare(decay_model(100));
    double vd = 0, vn = 0;
    const std::size_t runs = 2000;
    double md = mean_final(p, StochasticMethod::Direct, runs, 1, &vd);
    double mn = mean_final(p, StochasticMethod::NextReaction, runs, 2, &vn);
    double se = std::sqrt(vd / runs + vn / runs);
    CHECK(std::fabs(md - mn) <= 3 * se);
    CHECK(std::fabs(md - 100 * std::exp(-1.0)) <= 4 * std::sqrt(vd / runs));
  }

  TEST_CASE("tau leaping tracks decay") {
    auto p = prepare(decay_model(1000));
    double m = mean_final(p, StochasticMethod::TauLeap, 300, 4);
    CHECK(m == doctest::Approx(1000 * std::exp(-1.0)).epsilon(0.02));
  }

  TEST_CASE("tau leaping never goes negative") {
    auto p = prepare(std::string(kCell) +
                     "kineticLawOf a : fMA(50);\nA = a << A@cell;\nA@cell[3]");
    StochasticOptions o{2.0, 21, false, 0.5};
    for (std::uint64_t s = 0; s < 50; ++s) {
      Rng rng(s);
      auto tr = simulate_tau_leap(p.model, p.x0, o, rng);
      for (const auto& row : tr.states) CHECK(row[0] >= 0);
      CHECK(tr.states.back()[0] == 0);
    }
  }

  TEST_CASE("ensemble statistics") {
    auto p = prepare(decay_model(50));
    EnsembleOptions o;
    o.run.t_end = 2.0;
    o.run.points = 5;
    o.runs = 1;
    o.seed = 7;
    auto one = run_ensemble(p.model, p.x0, o);
    for (const auto& row : one.stddev) {
      for (double s : row) CHECK(s == 0.0);
    }
    CHECK(one.mean.front() == std::vector<double>{50, 0});
    o.runs = 40;
    o.threads = 1;
    auto a = run_ensemble(p.model, p.x0, o);
    o.threads = 3;
    auto b = run_ensemble(p.model, p.x0, o);
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == b.stddev);
    auto c = run_ensemble(p.model, p.x0, o);
    CHECK(a.mean == c.mean);
    o.seed = 8;
    auto d = run_ensemble(p.model, p.x0, o);
    CHECK(a.mean != d.mean);
    for (const auto& row : a.mean) CHECK(row[0] + row[1] == doctest::Approx(50.0));
  }

  TEST_CASE("ensemble observables are evaluated per run") {
    auto net = network_of(std::string(kCell) +
                          "kineticLawOf a : fMA(1);\nA = a << A@cell;\nB = a >> B@cell;\n"
                          "frac = B@cell / A@cell;\nA@cell[1] <*> B@cell[0]");
    auto params = resolve_parameters(net.parameters);
    auto model = build_stochastic_model(net, bind_rates(net, params));
    auto obs = compile_observables(net, params);
    EnsembleOptions o;
    o.run.t_end = 50.0;
    o.run.points = 2;
    o.runs = 10;
    auto e = run_ensemble(model, net.initial_state, o, obs);
    REQUIRE(e.mean.back().size() == 3);
    CHECK(e.mean.front()[2] == 0.0);
    // Every run has converted by t = 50, so the ratio is undefined everywhere.
    CHECK(e.undefined.back()[2] == 10);
    CHECK(std::isnan(e.mean.back()[2]));
  }

  TEST_CASE("bundled model conserves moieties exactly") {
    auto net = network_of(testing::corpus_text());
    auto model = build_stochastic_model(net, bind_rates(net, resolve_parameters(net.parameters)));
    auto basis = conserved_moieties(net);
    StochasticOptions o{300.0, 31};
    for (auto sim : {&simulate_direct, &simulate_next_reaction, &simulate_tau_leap}) {
      Rng rng(21);
      auto tr = (*sim)(model, net.initial_state, o, rng);
      CHECK(tr.event_count > 0);
      for (const auto& m : basis) {
        std::int64_t ref = std::inner_product(m.begin(), m.end(), net.initial_state.begin(),
                                              std::int64_t{0});
        for (const auto& row : tr.states) {
          CHECK(std::inner_product(m.begin(), m.end(), row.begin(), std::int64_t{0}) == ref);
          for (auto v : row) CHECK(v >= 0);
        }
      }
    }
  }
}
