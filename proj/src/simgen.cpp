#include "eftc/simgen.hpp"
#include "eftc/error.hpp"
#include "eftc/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <string>

namespace eftc {

double GpKernelParams::operator()(double t, double s) const {
  return alpha * std::exp(-beta * std::pow(std::abs(t - s), nu));
}

void GpKernelParams::validate() const {
  EFTC_REQUIRE(alpha > 0.0 && beta > 0.0 && nu > 0.0 && std::isfinite(alpha) && std::isfinite(beta) &&
                   std::isfinite(nu),
               ErrorCode::InvalidParam, "kernel parameters alpha, beta, nu must all be > 0");
}

namespace {

GroupModel linear(double mu, GpKernelParams k) {
  GroupModel g;
  g.model = MeanModel::Linear;
  g.mu = mu;
  g.kernel = k;
  return g;
}

GroupModel shift(double mu, double q, Interval when, GpKernelParams k) {
  GroupModel g = linear(mu, k);
  g.model = MeanModel::Shift;
  g.q = q;
  g.shift_time = when;
  g.k_positive = 0.5;
  return g;
}

// P(u = 1) = 0.1 is stated for the third design only; the later designs
// reuse "the same model" and inherit it.
GroupModel bump(double mu, double q, double r, double z, double w, Interval v, GpKernelParams k) {
  GroupModel g = linear(mu, k);
  g.model = MeanModel::Bump;
  g.q = q;
  g.r = r;
  g.z = z;
  g.w = w;
  g.v = v;
  g.u_prob = 0.1;
  return g;
}

void validate(const Interval& i, const char* what) {
  EFTC_REQUIRE(std::isfinite(i.lo) && std::isfinite(i.hi) && i.lo <= i.hi, ErrorCode::InvalidScenario,
               std::string(what) + " interval needs lo <= hi");
}

void validate(const GroupModel& g) {
  g.kernel.validate();
  validate(g.shift_time, "shift time");
  validate(g.b1, "b1");
  validate(g.c1, "c1");
  validate(g.v, "v");
  EFTC_REQUIRE(g.k_positive >= 0.0 && g.k_positive <= 1.0 && g.u_prob >= 0.0 && g.u_prob <= 1.0,
               ErrorCode::InvalidScenario, "probabilities must lie in [0, 1]");
  if (g.model == MeanModel::Bump)
    EFTC_REQUIRE(g.r > 0.0, ErrorCode::InvalidScenario, "bump width r must be > 0");
}

}  // namespace

ScenarioSpec scenario_spec(int id, std::uint64_t seed) {
  ScenarioSpec s;
  s.scenario_id = id;
  s.seed = seed;
  const GpKernelParams unit{1.0, 1.0, 1.0};
  switch (id) {
    case 1:
      s.groups = {linear(8.0, unit), shift(8.0, 3.0, {0.5, 0.9}, unit)};
      break;
    case 2: {
      GroupModel g1;
      g1.model = MeanModel::Sinusoid;
      g1.a1 = 1.0;
      g1.a2 = 8.0;
      g1.kernel = unit;
      GroupModel g2;
      g2.model = MeanModel::SinusoidMixture;
      g2.b1 = {1.5, 2.5};
      g2.c1 = {5.0, 10.5};
      g2.b2 = 8.0;  // not given numerically; matches a2
      g2.c2 = 8.0;
      g2.u_prob = 0.60;
      g2.kernel = unit;
      s.groups = {g1, g2};
      break;
    }
    case 3:
      s.groups = {linear(8.0, unit), bump(8.0, 1.8, 0.02, 90.0, 2.0, {0.45, 0.55}, unit)};
      break;
    case 4: {
      const GpKernelParams k12{1.3, 1.2, 1.0}, k34{0.8, 0.8, 1.0};
      s.groups = {linear(0.0, k12), bump(0.0, 1.0, 0.02, 90.0, 2.0, {0.45, 0.45}, k12), linear(-2.0, k34),
                  bump(-2.0, 1.8, 0.01, 90.0, 5.0, {0.15, 0.15}, k34)};
      break;
    }
    case 5:
      s.groups = {linear(0.0, unit), bump(0.0, 1.8, 0.02, 90.0, 2.0, {0.45, 0.45}, unit),
                  bump(1.0, 0.8, 0.02, 90.0, 2.0, {0.65, 0.65}, unit)};
      break;
    case 6: {
      const GpKernelParams k{2.0, 1.0, 0.5};
      s.groups = {linear(2.0, k), shift(2.0, 3.0, {0.6, 0.75}, k), shift(2.0, 3.0, {0.8, 0.9}, k)};
      break;
    }
    default:
      throw Error(ErrorCode::InvalidScenario, "scenario id must be 1..6, got " + std::to_string(id));
  }
  return s;
}

CurveDraw draw_curve_parameters(const GroupModel& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uniform = [&](const Interval& i) { return i.lo == i.hi ? i.lo : i.lo + (i.hi - i.lo) * U(rng); };
  CurveDraw d;
  switch (g.model) {
    case MeanModel::Linear:
    case MeanModel::Sinusoid:
      break;
    case MeanModel::Shift:
      d.k = U(rng) < g.k_positive ? 1 : -1;
      d.shift_time = uniform(g.shift_time);
      break;
    case MeanModel::SinusoidMixture:
      d.u = U(rng) < g.u_prob ? 1 : 0;
      d.b1 = uniform(g.b1);
      d.c1 = uniform(g.c1);
      break;
    case MeanModel::Bump:
      d.u = U(rng) < g.u_prob ? 1 : 0;
      d.v = uniform(g.v);
      break;
  }
  return d;
}

double mean_value(const GroupModel& g, const CurveDraw& d, double t) {
  const double s = std::sin(std::numbers::pi * t), c = std::cos(std::numbers::pi * t);
  switch (g.model) {
    case MeanModel::Linear: return g.mu * t;
    case MeanModel::Shift: return g.mu * t + (d.shift_time <= t ? g.q * d.k : 0.0);
    case MeanModel::Sinusoid: return g.a1 * s + g.a2 * c;
    case MeanModel::SinusoidMixture:
      return (d.b1 * s + g.b2 * c) * (1 - d.u) + (d.c1 * s + g.c2 * c) * d.u;
    case MeanModel::Bump: {
      const double sign = d.u == 1 ? -1.0 : 1.0;  // (-1)^u
      // integer exponents keep the sign of (t - v); others use |t - v|
      const double dt = t - d.v;
      const double p = g.w == std::floor(g.w) ? std::pow(dt, g.w) : std::pow(std::abs(dt), g.w);
      const double peak = 1.0 / std::sqrt(std::numbers::pi * g.r);
      return g.mu * t + sign * g.q - sign * peak * std::exp(-g.z * p);
    }
  }
  return 0.0;
}

Matrix kernel_matrix(std::span<const double> grid, const GpKernelParams& kernel) {
  kernel.validate();
  const auto T = static_cast<Eigen::Index>(grid.size());
  Matrix S(T, T);
  for (Eigen::Index j = 0; j < T; ++j) {
    S(j, j) = kernel.alpha;
    for (Eigen::Index k = 0; k < j; ++k) S(j, k) = S(k, j) = kernel(grid[static_cast<std::size_t>(j)], grid[static_cast<std::size_t>(k)]);
  }
  return S;
}

Matrix kernel_cholesky(std::span<const double> grid, const GpKernelParams& kernel) {
  EFTC_REQUIRE(!grid.empty(), ErrorCode::TooFewPoints, "empty time grid");
  for (std::size_t j = 1; j < grid.size(); ++j)
    EFTC_REQUIRE(grid[j] > grid[j - 1], ErrorCode::InvalidGrid, "time grid must be strictly increasing");
  const Matrix S = kernel_matrix(grid, kernel);
  for (double jitter = 1e-10; jitter <= 1e-6 * (1 + 1e-9); jitter *= 10.0) {
    Matrix A = S;
    A.diagonal().array() += jitter * kernel.alpha;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(ErrorCode::KernelNotPD, "covariance matrix is not positive definite even with 1e-6 jitter");
}

Vector gp_sample_with_factor(const Matrix& chol, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vector z(chol.rows());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = N(rng);
  return chol.triangularView<Eigen::Lower>() * z;
}

Vector gp_sample(std::span<const double> grid, const GpKernelParams& kernel, std::mt19937_64& rng) {
  return gp_sample_with_factor(kernel_cholesky(grid, kernel), rng);
}

SplitSets generate_scenario(const ScenarioSpec& spec) {
  EFTC_REQUIRE(!spec.groups.empty(), ErrorCode::InvalidScenario, "scenario has no groups");
  EFTC_REQUIRE(spec.curves_per_class >= 2, ErrorCode::InvalidScenario, "need at least 2 curves per class");
  EFTC_REQUIRE(spec.time_points >= 2, ErrorCode::InvalidScenario, "need at least 2 time points");
  for (const auto& g : spec.groups) validate(g);

  const int C = static_cast<int>(spec.groups.size());
  const int n = spec.curves_per_class;
  const int n_train = n / 2;
  const std::vector<double> grid = equispaced_grid(static_cast<std::size_t>(spec.time_points));
  const auto T = static_cast<Eigen::Index>(grid.size());

  std::vector<Matrix> factors;
  for (const auto& g : spec.groups) factors.push_back(kernel_cholesky(grid, g.kernel));

  Matrix pool(static_cast<Eigen::Index>(C) * n, T);
  parallel_for(static_cast<std::size_t>(C) * static_cast<std::size_t>(n), [&](std::size_t idx) {
    const std::size_t c = idx / static_cast<std::size_t>(n), i = idx % static_cast<std::size_t>(n);
    const GroupModel& g = spec.groups[c];
    std::mt19937_64 rng(derive_seed(derive_seed(spec.seed, c), i));
    const CurveDraw d = draw_curve_parameters(g, rng);
    Vector x(T);
    for (Eigen::Index j = 0; j < T; ++j) x[j] = mean_value(g, d, grid[static_cast<std::size_t>(j)]);
    if (spec.noise) x += gp_sample_with_factor(factors[c], rng);
    pool.row(static_cast<Eigen::Index>(idx)) = x.transpose();
  });

  SplitSets out;
  for (CurveSet* set : {&out.train, &out.test}) {
    const bool train = set == &out.train;
    const int per_class = train ? n_train : n - n_train;
    set->name = "scenario" + std::to_string(spec.scenario_id) + (train ? "_train" : "_test");
    set->time_grid = grid;
    set->n_classes = C;
    for (int c = 0; c < C; ++c) set->class_values.push_back(c + 1);
    set->values.resize(static_cast<Eigen::Index>(C) * per_class, T);
    Eigen::Index row = 0;
    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < per_class; ++i) {
        const int src = c * n + (train ? i : n_train + i);
        set->values.row(row++) = pool.row(src);
        set->labels.push_back(c);
      }
    }
  }
  return out;
}

}  // namespace eftc
