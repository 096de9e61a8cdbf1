#include "biopepa/ode.hpp"

#include <algorithm>
#include <cmath>

#include "biopepa/error.hpp"

namespace biopepa {

namespace {

constexpr double kOverflow = 1e300;

void check_finite(const std::vector<double>& x, double t) {
  for (double v : x) {
    if (!(std::fabs(v) <= kOverflow)) {
      throw Error(ErrorCode::NumericOverflow,
                  "state magnitude exceeded 1e300 (or became NaN) at t=" + format_number(t));
    }
  }
}

void check_arguments(const std::vector<double>& x0, const VectorField& f, double t0,
                     double t_end, std::size_t n) {
  if (x0.size() != f.dimension) {
    throw Error(ErrorCode::InvalidArgument, "initial state has wrong dimension");
  }
  if (!(t_end > t0)) throw Error(ErrorCode::InvalidArgument, "stop time must exceed start time");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "at least two grid points are required");
}

/// Emits grid points lying in (t_a, t_b] through `sample(t, out)`.
class GridWriter {
 public:
  GridWriter(TimeSeries& ts) : ts_(ts) {}

  template <class Sample>
  void advance(double t_b, bool last, Sample&& sample) {
    while (next_ < ts_.times.size() && (ts_.times[next_] <= t_b || last)) {
      sample(ts_.times[next_], ts_.states[next_]);
      ++next_;
    }
  }

  void set_first(const std::vector<double>& x0) {
    ts_.states[0] = x0;
    next_ = 1;
  }

 private:
  TimeSeries& ts_;
  std::size_t next_ = 0;
};

TimeSeries make_series(double t0, double t_end, std::size_t n, std::size_t dim) {
  TimeSeries ts;
  ts.times = uniform_grid(t0, t_end, n);
  ts.states.assign(n, std::vector<double>(dim, 0.0));
  return ts;
}

}  // namespace

std::vector<double> uniform_grid(double t0, double t_end, std::size_t n) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = t0 + (t_end - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  grid.back() = t_end;
  return grid;
}

VectorField build_vector_field(const ReactionNetwork& network,
                               const std::vector<RateFunction>& rates) {
  struct Change {
    std::size_t species;
    double coeff;
  };
  std::vector<std::vector<Change>> changes(network.reactions.size());
  for (std::size_t j = 0; j < network.reactions.size(); ++j) {
    for (std::size_t i = 0; i < network.species.size(); ++i) {
      if (int s = network.stoichiometry[j][i]) changes[j].push_back({i, double(s)});
    }
  }
  VectorField f;
  f.dimension = network.species.size();
  f.fn = [rates, changes, dim = f.dimension](const double* x, double t, double* dxdt) {
    std::fill(dxdt, dxdt + dim, 0.0);
    for (std::size_t j = 0; j < rates.size(); ++j) {
      if (changes[j].empty()) continue;
      double v = rates[j](x, t);
      for (const auto& c : changes[j]) dxdt[c.species] += c.coeff * v;
    }
  };
  return f;
}

TimeSeries integrate_rk4(const VectorField& f, const std::vector<double>& x0, double t0,
                         double t_end, double h, std::size_t n, IntegrationStats* stats) {
  check_arguments(x0, f, t0, t_end, n);
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be positive");
  const std::size_t dim = f.dimension;
  TimeSeries ts = make_series(t0, t_end, n, dim);
  GridWriter out(ts);
  out.set_first(x0);
  check_finite(x0, t0);

  std::vector<double> x = x0, xn(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  const double span = t_end - t0;
  double t = t0;
  IntegrationStats local;
  for (std::size_t step = 1;; ++step) {
    double t_next = t0 + static_cast<double>(step) * h;
    bool last = t_next >= t_end - 1e-12 * span;
    if (last) t_next = t_end;
    double hs = t_next - t;

    f.fn(x.data(), t, k1.data());
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * hs * k1[i];
    f.fn(tmp.data(), t + 0.5 * hs, k2.data());
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * hs * k2[i];
    f.fn(tmp.data(), t + 0.5 * hs, k3.data());
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + hs * k3[i];
    f.fn(tmp.data(), t_next, k4.data());
    for (std::size_t i = 0; i < dim; ++i) {
      xn[i] = x[i] + hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    local.evaluations += 4;
    ++local.steps;
    check_finite(xn, t_next);

    out.advance(t_next, last, [&](double tg, std::vector<double>& row) {
      double w = hs > 0.0 ? (tg - t) / hs : 1.0;
      w = std::clamp(w, 0.0, 1.0);
      for (std::size_t i = 0; i < dim; ++i) row[i] = x[i] + w * (xn[i] - x[i]);
    });
    x.swap(xn);
    t = t_next;
    if (last) break;
  }
  if (stats) *stats = local;
  return ts;
}

TimeSeries integrate_dopri(const VectorField& f, const std::vector<double>& x0, double t0,
                           double t_end, double rtol, double atol, std::size_t n,
                           IntegrationStats* stats) {
  check_arguments(x0, f, t0, t_end, n);
  if (!(rtol > 0.0) || !(atol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  }
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  const std::size_t dim = f.dimension;
  TimeSeries ts = make_series(t0, t_end, n, dim);
  GridWriter out(ts);
  out.set_first(x0);
  check_finite(x0, t0);

  std::vector<double> x = x0, xn(dim), k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim),
                      k7(dim), tmp(dim), r2(dim), r3(dim), r4(dim), r5(dim);
  IntegrationStats local;
  const double span = t_end - t0;
  auto eval = [&](const std::vector<double>& y, double t, std::vector<double>& k) {
    f.fn(y.data(), t, k.data());
    ++local.evaluations;
  };
  auto norm = [&](const std::vector<double>& v, const std::vector<double>& ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double sc = atol + rtol * std::max(std::fabs(x[i]), std::fabs(ref[i]));
      s += (v[i] / sc) * (v[i] / sc);
    }
    return dim ? std::sqrt(s / static_cast<double>(dim)) : 0.0;
  };

  double t = t0;
  eval(x, t, k1);

  // Initial step size heuristic.
  double h;
  {
    double dnf = norm(x, x), dny = norm(k1, x);
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dnf / dny;
    h = std::min(h, span);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * k1[i];
    eval(tmp, t + h, k2);
    for (std::size_t i = 0; i < dim; ++i) r2[i] = (k2[i] - k1[i]) / h;
    double der2 = norm(r2, x);
    double der = std::max(dny, der2);
    double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 0.2);
    h = std::min({100.0 * h, h1, span});
  }

  bool rejected_last = false;
  for (;;) {
    bool last = false;
    if (t + h >= t_end - 1e-12 * span) {
      h = t_end - t;
      last = true;
    }
    if (h < 1e-14 * span) {
      throw Error(ErrorCode::StepUnderflow,
                  "step size underflow at t=" + format_number(t) + " (h=" + format_number(h) + ")");
    }
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * a21 * k1[i];
    eval(tmp, t + c2 * h, k2);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
    eval(tmp, t + c3 * h, k3);
    for (std::size_t i = 0; i < dim; ++i)
      tmp[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    eval(tmp, t + c4 * h, k4);
    for (std::size_t i = 0; i < dim; ++i)
      tmp[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    eval(tmp, t + c5 * h, k5);
    for (std::size_t i = 0; i < dim; ++i)
      tmp[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    eval(tmp, t + h, k6);
    for (std::size_t i = 0; i < dim; ++i)
      xn[i] = x[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    eval(xn, t + h, k7);
    for (std::size_t i = 0; i < dim; ++i) {
      tmp[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    double err = norm(tmp, xn);
    if (!std::isfinite(err)) {
      err = 1e10;
    }
    double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
    fac = std::clamp(fac, 0.2, 5.0);

    if (err <= 1.0) {
      check_finite(xn, t + h);
      ++local.steps;
      for (std::size_t i = 0; i < dim; ++i) {
        r2[i] = xn[i] - x[i];
        r3[i] = h * k1[i] - r2[i];
        r4[i] = r2[i] - h * k7[i] - r3[i];
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      const double t_old = t, h_old = h;
      const double t_new = last ? t_end : t + h;
      out.advance(t_new, last, [&](double tg, std::vector<double>& row) {
        double th = std::clamp((tg - t_old) / h_old, 0.0, 1.0);
        double th1 = 1.0 - th;
        for (std::size_t i = 0; i < dim; ++i) {
          row[i] = x[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
      });
      x.swap(xn);
      k1.swap(k7);  // first same as last
      t = t_new;
      if (last) break;
      if (rejected_last) fac = std::min(fac, 1.0);
      rejected_last = false;
      h *= fac;
    } else {
      ++local.rejected;
      rejected_last = true;
      h *= std::min(fac, 1.0);
    }
  }
  if (stats) *stats = local;
  return ts;
}

}  // namespace biopepa
