// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "biopepa/analyzer.hpp"
#include "biopepa/cli.hpp"
#include "biopepa/error.hpp"
#include "biopepa/ode.hpp"
#include "biopepa/parser.hpp"
#include "biopepa/stochastic.hpp"

#include <sys/wait.h>

using namespace biopepa;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

struct Process {
  int status = -1;
  std::string out;
};

// Runs the command line tool with stderr folded into `out` when asked.
Process run_cli(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string("\"") + BIOPEPA_CLI + "\" " + args +
                    (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Process p;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return p;
  char buf[65536];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) p.out.append(buf, n);
  int rc = pclose(pipe);
  p.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return p;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing column " + name);
    return std::size_t(it - header.begin());
  }
};

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::istringstream in(text);
  std::string line;
  if (std::getline(in, line)) {
    std::istringstream h(line);
    for (std::string cell; std::getline(h, cell, ',');) csv.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream r(line);
    for (std::string cell; std::getline(r, cell, ',');) {
      row.push_back(cell.empty() ? NAN : std::stod(cell));
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

std::string corpus_path() { return BIOPEPA_CORPUS; }

const ReactionNetwork& corpus_network() {
  static const ReactionNetwork net = [] {
    auto loaded = load_model(read_file(corpus_path()));
    if (!loaded.ok()) throw std::runtime_error("bundled model failed analysis");
    return *loaded.network;
  }();
  return net;
}

constexpr double kHorizon = 1800.0;
constexpr std::size_t kPoints = 181;

SimulationOutput corpus_ode(Method m) {
  RunConfig c;
  c.method = m;
  c.stop = kHorizon;
  c.points = kPoints;
  return run_simulation(corpus_network(), c);
}

// Grid points where the ODE fraction is at least 10% of its maximum; the
// checkpoints sit at one third, two thirds and the end of that set.
std::vector<std::size_t> checkpoints() {
  static const std::vector<std::size_t> points = [] {
    auto ode = corpus_ode(Method::OdeDopri);
    auto f = *ode.column("MAPK_active_fraction");
    double peak = 0;
    for (const auto& row : ode.values) peak = std::max(peak, row[f]);
    std::vector<std::size_t> q;
    for (std::size_t p = 0; p < ode.values.size(); ++p) {
      if (ode.values[p][f] >= 0.1 * peak) q.push_back(p);
    }
    return std::vector<std::size_t>{q[q.size() / 3], q[2 * q.size() / 3], q.back()};
  }();
  return points;
}

double grid_time(std::size_t p) { return kHorizon * double(p) / double(kPoints - 1); }

// Criterion 1.
Outcome corpus_fidelity() {
  Outcome o;
  auto start = Clock::now();
  auto check = run_cli("check \"" + corpus_path() + "\"", true);
  auto parsed = parse_system(read_file(corpus_path()));
  double elapsed = seconds_since(start);
  o.require(check.status == 0, "check exit " + std::to_string(check.status));
  o.require(check.out.empty(), "check printed diagnostics");
  o.require(parsed.ok(), "parse failed");
  if (parsed.ok()) {
    const auto& s = *parsed.system;
    o.require(s.locations.size() == 3, "locations " + std::to_string(s.locations.size()));
    o.require(s.kinetic_laws.size() == 45, "laws " + std::to_string(s.kinetic_laws.size()));
    o.require(s.components.size() == 36, "components " + std::to_string(s.components.size()));
    o.require(s.compositions.size() == 3, "compositions " + std::to_string(s.compositions.size()));
    o.require(s.observables.size() == 1, "observables " + std::to_string(s.observables.size()));
    o.detail << "3 locations, 45 laws, 36 components, 3 compositions, 1 observable";
  }
  o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  o.detail << " in " << elapsed << " s";
  return o;
}

// Criterion 2.
Outcome analytic_integrators() {
  Outcome o;
  auto start = Clock::now();
  VectorField decay{1, [](const double* x, double, double* d) { d[0] = -x[0]; }};
  const double exact = std::exp(-1.0);
  double e_rk4 = std::fabs(integrate_rk4(decay, {1.0}, 0, 1, 0.001, 2).states.back()[0] - exact);
  double e_dp =
      std::fabs(integrate_dopri(decay, {1.0}, 0, 1, 1e-6, 1e-9, 2).states.back()[0] - exact);
  double e1 = std::fabs(integrate_rk4(decay, {1.0}, 0, 1, 0.1, 2).states.back()[0] - exact);
  double e2 = std::fabs(integrate_rk4(decay, {1.0}, 0, 1, 0.05, 2).states.back()[0] - exact);
  double elapsed = seconds_since(start);
  o.require(e_rk4 < 1e-8, "rk4 error " + std::to_string(e_rk4));
  o.require(e_dp < 1e-5, "dopri error " + std::to_string(e_dp));
  o.require(e1 / e2 >= 8.0, "halving ratio " + std::to_string(e1 / e2));
  o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  o.detail << "rk4 err " << e_rk4 << ", dopri err " << e_dp << ", halving ratio " << e1 / e2
           << ", " << elapsed << " s";
  return o;
}

// Rank of a small dense matrix by Gaussian elimination.
std::size_t rank_of(std::vector<std::vector<double>> m) {
  std::size_t rank = 0;
  const std::size_t cols = m.empty() ? 0 : m[0].size();
  for (std::size_t c = 0; c < cols && rank < m.size(); ++c) {
    std::size_t piv = rank;
    for (std::size_t r = rank; r < m.size(); ++r) {
      if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
    }
    if (std::fabs(m[piv][c]) < 1e-9) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == rank) continue;
      double f = m[r][c] / m[rank][c];
      for (std::size_t k = c; k < cols; ++k) m[r][k] -= f * m[rank][k];
    }
    ++rank;
  }
  return rank;
}

// Criterion 3.
Outcome conservation() {
  Outcome o;
  auto start = Clock::now();
  const auto& net = corpus_network();
  const std::vector<std::tuple<std::string, std::string, double>> pairs{
      {"MAPK", "MAPK_active", 217}, {"B_Raf", "B_Raf_active", 120},
      {"MEK", "MEK_active", 108},   {"PTP", "PTP_PKA", 120},
      {"PDE4", "PDE4_P", 241}};
  auto basis = conserved_moieties(net);
  std::vector<std::vector<double>> rows;
  for (const auto& b : basis) rows.emplace_back(b.begin(), b.end());
  const std::size_t base_rank = rank_of(rows);
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  for (const auto& [a, b, total] : pairs) {
    auto ia = net.species_index(a, "cyto"), ib = net.species_index(b, "cyto");
    if (!ia || !ib) {
      o.require(false, "missing species " + a + "/" + b);
      return o;
    }
    idx.emplace_back(*ia, *ib);
    std::vector<double> v(net.species.size(), 0.0);
    v[*ia] = v[*ib] = 1.0;
    auto extended = rows;
    extended.push_back(v);
    o.require(rank_of(extended) == base_rank, a + "+" + b + " not in the moiety basis");
    o.require(double(net.initial_state[*ia] + net.initial_state[*ib]) == total,
              a + "+" + b + " initial sum");
  }

  for (Method m : {Method::OdeRk4, Method::OdeDopri}) {
    auto ode = corpus_ode(m);
    double worst = 0;
    for (const auto& row : ode.values) {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        double total = std::get<2>(pairs[k]);
        worst = std::max(worst, std::fabs(row[idx[k].first] + row[idx[k].second] - total) / total);
      }
    }
    o.require(worst <= 1e-6, std::string(method_name(m)) + " drift " + std::to_string(worst));
    o.detail << method_name(m) << " max rel drift " << worst << ", ";
  }

  auto model = build_stochastic_model(net, bind_rates(net, resolve_parameters(net.parameters)));
  std::size_t checked = 0;
  for (std::uint64_t run = 0; run < 5; ++run) {
    StochasticOptions opt{kHorizon, kPoints, true};
    Rng rng = Rng::for_run(2024, run);
    auto tr = simulate_direct(model, net.initial_state, opt, rng);
    // Replay every event so the sums are checked along the whole path.
    auto x = net.initial_state;
    for (const auto& e : tr.events) {
      for (const auto& c : model.changes[e.reaction]) x[c.species] += c.delta;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (x[idx[k].first] + x[idx[k].second] != std::int64_t(std::get<2>(pairs[k]))) {
          o.require(false, "ssa sum broken at t=" + std::to_string(e.time));
          return o;
        }
      }
      ++checked;
    }
    o.require(x == tr.states.back(), "event replay disagrees with recorded state");
  }
  double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  o.detail << "ssa exact over " << checked << " events in 5 runs, " << elapsed << " s";
  return o;
}

// Criterion 4.
Outcome solver_agreement() {
  Outcome o;
  auto rk4 = corpus_ode(Method::OdeRk4);
  auto dp = corpus_ode(Method::OdeDopri);
  auto f = *rk4.column("MAPK_active_fraction");
  double worst = 0;
  for (std::size_t p = 0; p < rk4.values.size(); ++p) {
    double a = rk4.values[p][f], b = dp.values[p][f];
    double scale = std::max(std::fabs(a), std::fabs(b));
    double rel = scale == 0 ? 0.0 : std::fabs(a - b) / scale;
    worst = std::max(worst, rel);
  }
  o.require(worst <= 1e-3, "max relative difference " + std::to_string(worst));
  o.detail << "max relative difference " << worst << " over " << rk4.values.size() << " points";
  return o;
}

// Criterion 5.
Outcome ssa_vs_ode() {
  Outcome o;
  auto start = Clock::now();
  auto ode = corpus_ode(Method::OdeDopri);
  RunConfig c;
  c.method = Method::Ssa;
  c.stop = kHorizon;
  c.points = kPoints;
  c.runs = 500;
  c.seed = 1;
  auto ssa = run_simulation(corpus_network(), c);
  auto f = *ode.column("MAPK_active_fraction");
  for (std::size_t p : checkpoints()) {
    double a = ssa.values[p][f], b = ode.values[p][f];
    double rel = std::fabs(a - b) / std::fabs(b);
    o.require(rel <= 0.05, "t=" + std::to_string(grid_time(p)) + " rel " + std::to_string(rel));
    o.detail << "t=" << grid_time(p) << ": ssa " << a << " ode " << b << " (rel " << rel
             << "); ";
  }
  o.detail << seconds_since(start) << " s";
  return o;
}

// Criterion 6.
Outcome method_equivalence() {
  Outcome o;
  auto chain = load_model(
      "location cell : size = 1, kind = compartment;\n"
      "k1 = 1;\nk2 = 0.5;\n"
      "kineticLawOf a : fMA(k1);\nkineticLawOf b : fMA(k2);\n"
      "A = a << A@cell;\nB = a >> B@cell + b << B@cell;\nC = b >> C@cell;\n"
      "A@cell[100] <*> B@cell[0] <*> C@cell[0]");
  if (!chain.ok()) {
    o.require(false, "toy chain failed analysis");
    return o;
  }
  const auto& net = *chain.network;
  auto model = build_stochastic_model(net, bind_rates(net, resolve_parameters(net.parameters)));
  EnsembleOptions e;
  e.run.t_end = 2.0;
  e.run.points = 5;
  e.runs = 2000;
  e.seed = 101;
  e.method = StochasticMethod::Direct;
  auto direct = run_ensemble(model, net.initial_state, e);
  e.seed = 202;
  e.method = StochasticMethod::NextReaction;
  auto nrm = run_ensemble(model, net.initial_state, e);
  double worst = 0;
  for (std::size_t p = 1; p < direct.times.size(); ++p) {
    for (std::size_t s = 0; s < 3; ++s) {
      double se = std::sqrt((direct.stddev[p][s] * direct.stddev[p][s] +
                             nrm.stddev[p][s] * nrm.stddev[p][s]) /
                            double(e.runs));
      double z = std::fabs(direct.mean[p][s] - nrm.mean[p][s]) / se;
      worst = std::max(worst, z);
    }
  }
  o.require(worst <= 3.0, "direct vs next-reaction " + std::to_string(worst) + " SE");
  o.detail << "direct vs next-reaction max " << worst << " SE; ";

  auto decay = load_model(
      "location cell : size = 1, kind = compartment;\n"
      "kineticLawOf a : fMA(1);\nA = a << A@cell;\nA@cell[1000]");
  const auto& dn = *decay.network;
  auto dm = build_stochastic_model(dn, bind_rates(dn, resolve_parameters(dn.parameters)));
  EnsembleOptions t;
  t.method = StochasticMethod::TauLeap;
  t.run.t_end = 1.0;
  t.run.points = 2;
  t.run.tau = 0.001;
  t.runs = 200;
  t.seed = 303;
  auto tau = run_ensemble(dm, dn.initial_state, t);
  double exact = 1000 * std::exp(-1.0);
  double rel = std::fabs(tau.mean.back()[0] - exact) / exact;
  o.require(rel <= 0.02, "tau-leap rel " + std::to_string(rel));
  o.detail << "tau-leap mean " << tau.mean.back()[0] << " vs " << exact << " (rel " << rel << ")";
  return o;
}

// Criterion 7.
Outcome directional() {
  Outcome o;
  auto start = Clock::now();
  auto active = [](const std::vector<std::string>& sets) {
    std::string args = "simulate \"" + corpus_path() +
                       "\" --method ode-dopri --stop 1800 --points 181 --species MAPK_active@cyto";
    for (const auto& s : sets) args += " --set " + s;
    auto p = run_cli(args);
    if (p.status != 0) throw std::runtime_error("simulate failed for " + args);
    auto csv = parse_csv(p.out);
    std::vector<double> out;
    for (std::size_t cp : checkpoints()) out.push_back(csv.rows.at(cp).at(1));
    return out;
  };
  auto base = active({});
  auto binding = active({"Kf_v13=0.835", "Kf_v18=0.0006", "Kf_v23=0.0006", "Kf_v32=0.835"});
  auto km08 = active({"Km_v08=5"});
  auto ac = active({"Kf_AC_activation=50"});
  auto km15_up = active({"Km_v15=10"});
  auto km15_down = active({"Km_v15=0.001"});
  auto km20_up = active({"Km_v20=50"});
  auto km20_down = active({"Km_v20=0.005"});
  const auto cps = checkpoints();
  for (std::size_t i = 0; i < cps.size(); ++i) {
    std::string at = " at t=" + std::to_string(int(grid_time(cps[i])));
    o.require(binding[i] < base[i], "binding reduction not below baseline" + at);
    o.require(binding[i] < km08[i], "binding reduction not below Km_v08 x10" + at);
    o.require(binding[i] < ac[i], "binding reduction not below Kf_AC_activation /10" + at);
    o.require(km15_up[i] < base[i], "Km_v15 x100 does not lower" + at);
    o.require(km15_down[i] > base[i], "Km_v15 /100 does not raise" + at);
    o.require(km20_up[i] > base[i], "Km_v20 x100 does not raise" + at);
    o.require(km20_down[i] < base[i], "Km_v20 /100 does not lower" + at);
  }
  double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  o.detail << "checkpoints";
  for (auto p : cps) o.detail << ' ' << grid_time(p);
  o.detail << "; final active MAPK base " << base.back() << ", binding " << binding.back()
           << ", Km_v08 " << km08.back() << ", AC " << ac.back() << ", Km_v15 x100/÷100 "
           << km15_up.back() << "/" << km15_down.back() << ", Km_v20 x100/÷100 "
           << km20_up.back() << "/" << km20_down.back() << "; " << elapsed << " s";
  return o;
}

std::size_t errors_with(const std::vector<Diagnostic>& ds, const std::string& code,
                        std::size_t* total) {
  std::size_t n = 0;
  *total = 0;
  for (const auto& d : ds) {
    if (d.severity != Severity::Error) continue;
    ++*total;
    n += d.code == code;
  }
  return n;
}

// Criterion 8.
Outcome static_negatives() {
  Outcome o;
  const std::string cell = "location cell : size = 1, kind = compartment;\n";
  std::size_t total = 0;
  auto mm = load_model(cell +
                       "kineticLawOf v : fMM(1, 2);\n"
                       "S = v << S@cell;\nT = v << T@cell;\nP = v >> P@cell;\n"
                       "S@cell[5] <*> T@cell[5] <*> P@cell[0]");
  std::size_t n = errors_with(mm.diagnostics, "MM_ROLE_MISMATCH", &total);
  o.require(n == 1 && total == 1, "fMM two reactants gave " + std::to_string(total) + " errors");

  auto loc = load_model(cell +
                        "kineticLawOf a : fMA(1);\nA = a << A@nowhere;\nB = a >> B@cell;\n"
                        "A@cell[3] <*> B@cell[0]");
  errors_with(loc.diagnostics, "UNDEFINED_LOCATION", &total);
  o.require(total == 1, "undefined location gave " + std::to_string(total) + " errors");

  std::string span_model =
      "location extra : size = 0.111, kind = compartment;\n"
      "location cyto_mem in extra : size = 0.2, kind = membrane;\n"
      "location cyto in cyto_mem : size = 1, kind = compartment;\n"
      "kineticLawOf bind : fMA(0.01);\n"
      "L = bind << L@extra;\nR = bind << R@cyto;\nC = bind >> C@cyto;\n"
      "L@extra[50] <*> R@cyto[40] <*> C@cyto[0]";
  auto path = (std::filesystem::temp_directory_path() / "biopepa_acceptance_span.biopepa").string();
  {
    std::ofstream(path) << span_model;
  }
  auto sim = run_cli("simulate \"" + path + "\" --method ode-dopri --stop 10 --points 3", true);
  o.require(sim.status == 0, "spanning reaction did not simulate");
  o.require(sim.out.find("WARNING NON_ADJACENT_REACTION") != std::string::npos,
            "no NON_ADJACENT_REACTION warning");
  auto ssa = run_cli("simulate \"" + path + "\" --method ssa --stop 10 --points 3 --runs 2");
  o.require(ssa.status == 0, "spanning reaction did not simulate stochastically");
  std::filesystem::remove(path);
  o.detail << "one MM_ROLE_MISMATCH, one undefined-location error, non-adjacent warning and run";
  return o;
}

// Criterion 9.
Outcome determinism() {
  Outcome o;
  const std::string base = "simulate \"" + corpus_path() + "\" --stop 300 --points 31 ";
  const std::vector<std::string> variants{
      "--method ode-rk4 --step 0.02",
      "--method ode-dopri",
      "--method ssa --runs 8 --seed 5",
      "--method nrm --runs 8 --seed 5",
      "--method tau --runs 8 --seed 5 --tau 0.05",
      "--method ssa --runs 8 --seed 5 --set Km_v20=50 --species MAPK_active_fraction",
  };
  for (const auto& v : variants) {
    auto a = run_cli(base + v), b = run_cli(base + v);
    o.require(a.status == 0 && !a.out.empty(), "'" + v + "' failed");
    o.require(a.out == b.out, "'" + v + "' differs between runs");
  }
  auto one = run_cli(base + "--method ssa --runs 8 --seed 5 --threads 1");
  auto many = run_cli(base + "--method ssa --runs 8 --seed 5 --threads 4");
  o.require(one.out == many.out, "thread count changes output");
  o.detail << variants.size() << " invocations repeated byte-identically, thread count invariant";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"corpus fidelity", corpus_fidelity},
      {"analytic integrator checks", analytic_integrators},
      {"conservation", conservation},
      {"rk4/dopri agreement", solver_agreement},
      {"ssa/ode agreement", ssa_vs_ode},
      {"method equivalence", method_equivalence},
      {"directional overrides", directional},
      {"static-analysis negatives", static_negatives},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
