#include "eftc/basis.hpp"
#include "eftc/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace eftc {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

BasisSystem::BasisSystem(int order, std::vector<double> interior_knots, double t_min,
                         double t_max)
    : order_(order), t_min_(t_min), t_max_(t_max), interior_(std::move(interior_knots)) {
  EFTC_REQUIRE(order_ >= 2, ErrorCode::InvalidParam, "spline order must be >= 2");
  EFTC_REQUIRE(std::isfinite(t_min_) && std::isfinite(t_max_) && t_min_ < t_max_,
               ErrorCode::InvalidGrid, "domain must be a non-empty finite interval");
  double prev = t_min_;
  for (double k : interior_) {
    EFTC_REQUIRE(std::isfinite(k) && k > prev && k < t_max_, ErrorCode::InvalidGrid,
                 "interior knots must be strictly increasing inside the domain");
    prev = k;
  }
  size_ = static_cast<int>(interior_.size()) + order_;
  knots_.reserve(interior_.size() + 2 * order_);
  knots_.insert(knots_.end(), order_, t_min_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), order_, t_max_);
}

BasisSystem BasisSystem::from_grid(std::span<const double> time_grid, int order) {
  EFTC_REQUIRE(time_grid.size() >= 2, ErrorCode::TooFewPoints,
               "need at least 2 sampling points, got " + std::to_string(time_grid.size()));
  for (std::size_t j = 0; j < time_grid.size(); ++j) {
    EFTC_REQUIRE(std::isfinite(time_grid[j]), ErrorCode::InvalidGrid, "non-finite time stamp");
    if (j > 0) {
      EFTC_REQUIRE(time_grid[j] > time_grid[j - 1], ErrorCode::InvalidGrid,
                   "time grid must be strictly increasing (index " + std::to_string(j) + ")");
    }
  }
  std::vector<double> interior(time_grid.begin() + 1, time_grid.end() - 1);
  return BasisSystem(order, std::move(interior), time_grid.front(), time_grid.back());
}

int BasisSystem::find_span(double t) const {
  const int p = order_ - 1;
  if (t >= knots_[size_]) return size_ - 1;
  auto first = knots_.begin() + p;
  auto last = knots_.begin() + size_ + 1;
  auto it = std::upper_bound(first, last, t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

int BasisSystem::eval_nonzero(double t, int deriv, std::span<double> out) const {
  EFTC_REQUIRE(deriv >= 0 && deriv < order_, ErrorCode::DerivativeOrderTooHigh,
               "derivative order " + std::to_string(deriv) + " needs spline order > " +
                   std::to_string(deriv));
  const double slack = 1e-12 * (t_max_ - t_min_);
  EFTC_REQUIRE(std::isfinite(t) && t >= t_min_ - slack && t <= t_max_ + slack,
               ErrorCode::OutOfDomain, "t=" + std::to_string(t) + " outside basis domain");
  t = std::clamp(t, t_min_, t_max_);

  // All nonzero basis functions and derivatives at t (de Boor's recursion in
  // the triangular-table form of Piegl & Tiller, algorithm A2.3).
  const int p = order_ - 1;
  const int span = find_span(t);
  std::vector<double> left(order_), right(order_);
  std::vector<double> ndu(order_ * order_);
  auto NDU = [&](int r, int c) -> double& { return ndu[r * order_ + c]; };
  NDU(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      NDU(j, r) = right[r + 1] + left[j - r];
      const double temp = NDU(r, j - 1) / NDU(j, r);
      NDU(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    NDU(j, j) = saved;
  }

  if (deriv == 0) {
    for (int j = 0; j <= p; ++j) out[j] = NDU(j, p);
    return span - p;
  }

  std::vector<double> a(2 * order_);
  auto A = [&](int s, int c) -> double& { return a[s * order_ + c]; };
  const int k = deriv;
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    A(0, 0) = 1.0;
    double d = 0.0;
    for (int kk = 1; kk <= k; ++kk) {
      d = 0.0;
      const int rk = r - kk;
      const int pk = p - kk;
      if (r >= kk) {
        A(s2, 0) = A(s1, 0) / NDU(pk + 1, rk);
        d = A(s2, 0) * NDU(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? kk - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        A(s2, j) = (A(s1, j) - A(s1, j - 1)) / NDU(pk + 1, rk + j);
        d += A(s2, j) * NDU(rk + j, pk);
      }
      if (r <= pk) {
        A(s2, kk) = -A(s1, kk - 1) / NDU(pk + 1, r);
        d += A(s2, kk) * NDU(r, pk);
      }
      std::swap(s1, s2);
    }
    out[r] = d;
  }
  double factor = 1.0;
  for (int i = p; i > p - k; --i) factor *= i;
  for (int r = 0; r <= p; ++r) out[r] *= factor;
  return span - p;
}

Vector BasisSystem::eval(double t, int deriv) const {
  std::vector<double> buf(order_);
  const int first = eval_nonzero(t, deriv, buf);
  Vector v = Vector::Zero(size_);
  for (int j = 0; j < order_; ++j) v[first + j] = buf[j];
  return v;
}

Matrix BasisSystem::design_matrix(std::span<const double> grid, int deriv) const {
  Matrix B = Matrix::Zero(static_cast<Eigen::Index>(grid.size()), size_);
  std::vector<double> buf(order_);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const int first = eval_nonzero(grid[j], deriv, buf);
    for (int q = 0; q < order_; ++q) B(static_cast<Eigen::Index>(j), first + q) = buf[q];
  }
  return B;
}

Matrix BasisSystem::roughness_penalty(int deriv) const {
  std::vector<double> nodes, weights;
  gauss_legendre(order_, nodes, weights);
  Matrix R = Matrix::Zero(size_, size_);
  std::vector<double> buf(order_);
  std::vector<double> breaks;
  breaks.push_back(t_min_);
  breaks.insert(breaks.end(), interior_.begin(), interior_.end());
  breaks.push_back(t_max_);
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double mid = 0.5 * (breaks[b] + breaks[b + 1]);
    const double half = 0.5 * (breaks[b + 1] - breaks[b]);
    for (int q = 0; q < order_; ++q) {
      const int first = eval_nonzero(mid + half * nodes[q], deriv, buf);
      const double w = half * weights[q];
      for (int i = 0; i < order_; ++i)
        for (int j = 0; j < order_; ++j) R(first + i, first + j) += w * buf[i] * buf[j];
    }
  }
  return R;
}

Matrix BasisSystem::end_jump_rows() const {
  std::vector<std::size_t> at;
  if (!interior_.empty()) at.push_back(0);
  if (interior_.size() > 1) at.push_back(interior_.size() - 1);
  // phi^(order-1) is constant on each span, so span midpoints give the
  // one-sided limits exactly
  std::vector<double> breaks{t_min_};
  breaks.insert(breaks.end(), interior_.begin(), interior_.end());
  breaks.push_back(t_max_);
  Matrix J = Matrix::Zero(static_cast<Eigen::Index>(at.size()), size_);
  for (std::size_t r = 0; r < at.size(); ++r) {
    const std::size_t k = at[r] + 1;
    const auto row = static_cast<Eigen::Index>(r);
    J.row(row) = eval(0.5 * (breaks[k] + breaks[k + 1]), order_ - 1).transpose() -
                 eval(0.5 * (breaks[k - 1] + breaks[k]), order_ - 1).transpose();
  }
  return J;
}

Vector CoefficientVector::eval(std::span<const double> t_grid, int deriv) const {
  EFTC_REQUIRE(basis != nullptr, ErrorCode::InvalidParam, "coefficient vector has no basis");
  EFTC_REQUIRE(values.size() == basis->size(), ErrorCode::DimensionMismatch,
               "coefficient length does not match basis size");
  Vector out(static_cast<Eigen::Index>(t_grid.size()));
  std::vector<double> buf(basis->order());
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    const int first = basis->eval_nonzero(t_grid[j], deriv, buf);
    double acc = 0.0;
    for (int q = 0; q < basis->order(); ++q) acc += values[first + q] * buf[q];
    out[static_cast<Eigen::Index>(j)] = acc;
  }
  return out;
}

struct CurveFitter::Factor {
  Eigen::LLT<Matrix> llt;
  Matrix design_t;  // B'
};

CurveFitter::CurveFitter(std::shared_ptr<const BasisSystem> basis, std::vector<double> time_grid,
                         FitOptions options)
    : basis_(std::move(basis)), grid_(std::move(time_grid)), options_(options) {
  EFTC_REQUIRE(basis_ != nullptr, ErrorCode::InvalidParam, "fitter needs a basis");
  EFTC_REQUIRE(std::isfinite(options_.penalty) && options_.penalty >= 0.0,
               ErrorCode::InvalidParam, "penalty weight must be >= 0");
  EFTC_REQUIRE(!grid_.empty(), ErrorCode::TooFewPoints, "empty fitting grid");
  for (std::size_t j = 1; j < grid_.size(); ++j) {
    EFTC_REQUIRE(grid_[j] > grid_[j - 1], ErrorCode::InvalidGrid,
                 "fitting grid must be strictly increasing");
  }
  const int max_cached = std::min(2, basis_->order() - 1);
  for (int r = 0; r <= max_cached; ++r) designs_.push_back(basis_->design_matrix(grid_, r));

  const Matrix& B = designs_[0];
  Matrix gram = B.transpose() * B;
  Matrix system = gram;
  const Matrix J = basis_->end_jump_rows();
  if (options_.penalty > 0.0 && J.rows() > 0) {
    const Matrix R = J.transpose() * J;
    const double scale = gram.trace() / std::max(R.trace(), 1e-300);
    system += (options_.penalty * scale) * R;
  }

  auto factor = std::make_shared<Factor>();
  factor->design_t = B.transpose();
  const double diag_scale = std::max(gram.trace() / basis_->size(), 1e-300);
  factor->llt.compute(system);
  for (double jitter = 1e-12; factor->llt.info() != Eigen::Success; jitter *= 10.0) {
    EFTC_REQUIRE(jitter <= 1e-6 * (1 + 1e-9), ErrorCode::InvalidParam,
                 "fitting system is not positive definite even with jitter");
    Matrix jittered = system;
    jittered.diagonal().array() += jitter * diag_scale;
    factor->llt.compute(jittered);
  }
  factor_ = std::move(factor);
}

const Matrix& CurveFitter::design(int deriv) const {
  EFTC_REQUIRE(deriv >= 0 && deriv < static_cast<int>(designs_.size()),
               ErrorCode::DerivativeOrderTooHigh, "derivative design matrix not available");
  return designs_[static_cast<std::size_t>(deriv)];
}

Vector CurveFitter::fit(const Eigen::Ref<const Vector>& samples) const {
  EFTC_REQUIRE(samples.size() == static_cast<Eigen::Index>(grid_.size()),
               ErrorCode::DimensionMismatch,
               "got " + std::to_string(samples.size()) + " samples for a grid of " +
                   std::to_string(grid_.size()));
  EFTC_REQUIRE(samples.allFinite(), ErrorCode::NonFiniteInput, "samples contain NaN or Inf");
  return factor_->llt.solve(factor_->design_t * samples);
}

Vector CurveFitter::fit(std::span<const double> samples) const {
  return fit(Eigen::Map<const Vector>(samples.data(), static_cast<Eigen::Index>(samples.size())));
}

Matrix CurveFitter::fit_rows(const Matrix& values) const {
  EFTC_REQUIRE(values.cols() == static_cast<Eigen::Index>(grid_.size()),
               ErrorCode::DimensionMismatch, "value columns must match the grid length");
  EFTC_REQUIRE(values.allFinite(), ErrorCode::NonFiniteInput, "values contain NaN or Inf");
  // one solve per row keeps each result independent of batch composition
  Matrix out(values.rows(), basis_->size());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const Vector rhs = factor_->design_t * values.row(i).transpose();
    out.row(i) = factor_->llt.solve(rhs).transpose();
  }
  return out;
}

CoefficientVector fit_curve(std::shared_ptr<const BasisSystem> basis,
                            std::span<const double> time_grid, std::span<const double> samples,
                            FitOptions options) {
  EFTC_REQUIRE(time_grid.size() == samples.size(), ErrorCode::DimensionMismatch,
               "time grid and samples differ in length");
  CurveFitter fitter(basis, std::vector<double>(time_grid.begin(), time_grid.end()), options);
  return {std::move(basis), fitter.fit(samples)};
}

Vector eval_curve(const CoefficientVector& coeffs, std::span<const double> t_grid, int deriv) {
  return coeffs.eval(t_grid, deriv);
}

std::vector<double> equispaced_grid(std::size_t n, double lo, double hi) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t j = 0; j < n; ++j)
    g[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

}  // namespace eftc
