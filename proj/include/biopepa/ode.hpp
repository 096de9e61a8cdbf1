#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "biopepa/analyzer.hpp"
#include "biopepa/kinetics.hpp"

namespace biopepa {

/// dx/dt = fn(x, t), written into `dxdt` (same length as x).
struct VectorField {
  std::size_t dimension = 0;
  std::function<void(const double* x, double t, double* dxdt)> fn;
};

/// Uniform-grid samples; states[i] belongs to times[i].
struct TimeSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

/// Equally spaced grid of n points from t0 to t_end (both included).
std::vector<double> uniform_grid(double t0, double t_end, std::size_t n);

/// dX_i/dt = sum_j S[j][i] * v_j(X, t).
VectorField build_vector_field(const ReactionNetwork& network,
                               const std::vector<RateFunction>& rates);

/// Counters reported by the integrators.
struct IntegrationStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Classical fixed-step RK4; the last step is shortened to land on t_end.
/// Output is linearly interpolated onto the n-point grid.
TimeSeries integrate_rk4(const VectorField& f, const std::vector<double>& x0, double t0,
                         double t_end, double h, std::size_t n,
                         IntegrationStats* stats = nullptr);

/// Dormand-Prince 5(4) with RMS error control and 4th-order dense output.
TimeSeries integrate_dopri(const VectorField& f, const std::vector<double>& x0, double t0,
                           double t_end, double rtol, double atol, std::size_t n,
                           IntegrationStats* stats = nullptr);

}  // namespace biopepa
