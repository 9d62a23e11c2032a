#pragma once

#include "eftc/enrich.hpp"

#include <cstdint>
#include <random>

namespace eftc {

/// Exponential-family covariance alpha * exp(-beta |t - s|^nu).
struct GpKernelParams {
  double alpha = 1.0;
  double beta = 1.0;
  double nu = 1.0;

  double operator()(double t, double s) const;
  void validate() const;  // InvalidParam unless all three are > 0
  bool operator==(const GpKernelParams&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Mean structure of one group; e(t) is always added on top.
enum class MeanModel {
  Linear,           // mu t
  Shift,            // mu t + q k 1{T <= t}, k = +/-1, T ~ U[shift_time]
  Sinusoid,         // a1 sin(pi t) + a2 cos(pi t)
  SinusoidMixture,  // (b1 sin + b2 cos)(1 - u) + (c1 sin + c2 cos) u, b1, c1 uniform
  Bump,             // mu t + (-1)^u q + (-1)^(1-u) (pi r)^(-1/2) exp(-z (t - v)^w)
};

struct GroupModel {
  MeanModel model = MeanModel::Linear;
  double mu = 0.0;
  double q = 0.0;
  Interval shift_time;         // T
  double k_positive = 0.5;     // P(k = +1)
  double a1 = 0.0, a2 = 0.0;
  Interval b1, c1;
  double b2 = 0.0, c2 = 0.0;
  double u_prob = 0.0;         // P(u = 1)
  double r = 0.0, z = 0.0, w = 0.0;
  Interval v;
  GpKernelParams kernel;

  bool operator==(const GroupModel&) const = default;
};

struct ScenarioSpec {
  int scenario_id = 1;
  std::vector<GroupModel> groups;  // one per class
  int curves_per_class = 100;      // pool per class, split half train / half test
  int time_points = 50;
  std::uint64_t seed = 0;
  bool noise = true;  // false drops e(t), leaving the mean structure only
};

/// The six simulation designs with their published constants.
/// Throws InvalidScenario for ids outside 1..6.
ScenarioSpec scenario_spec(int scenario_id, std::uint64_t seed = 0);

/// Per-curve random parameters of a group model.
struct CurveDraw {
  int u = 0;
  int k = 1;
  double shift_time = 0.0;
  double b1 = 0.0, c1 = 0.0;
  double v = 0.0;
};

CurveDraw draw_curve_parameters(const GroupModel& g, std::mt19937_64& rng);

/// Noise-free value of a group's curve at t for given draws.
double mean_value(const GroupModel& g, const CurveDraw& d, double t);

/// Sigma_jk = kernel(t_j, t_k).
Matrix kernel_matrix(std::span<const double> time_grid, const GpKernelParams& kernel);

/// Lower Cholesky factor of the kernel matrix; diagonal jitter starts at
/// 1e-10 (relative to alpha) and grows x10 up to 1e-6, then KernelNotPD.
Matrix kernel_cholesky(std::span<const double> time_grid, const GpKernelParams& kernel);

/// One zero-mean draw e ~ N(0, Sigma).
Vector gp_sample(std::span<const double> time_grid, const GpKernelParams& kernel, std::mt19937_64& rng);
Vector gp_sample_with_factor(const Matrix& chol, std::mt19937_64& rng);

struct SplitSets {
  CurveSet train;
  CurveSet test;
};

/// Draws every curve from its own stream keyed by (seed, class, index), so
/// output is independent of scheduling. Labels are 0..C-1 with original
/// class values 1..C; the grid is time_points equispaced points on [0,1].
SplitSets generate_scenario(const ScenarioSpec& spec);

}  // namespace eftc
