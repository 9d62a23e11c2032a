#pragma once

#include <Eigen/Core>

#include <memory>
#include <span>
#include <vector>

namespace eftc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// B-spline basis of a given order (4 = cubic) over a clamped knot vector.
///
/// The full knot vector repeats each boundary knot `order` times, so the
/// basis has `interior_knots().size() + order` functions, interpolates at
/// the domain ends and forms a partition of unity on [t_min, t_max]. The
/// right endpoint belongs to the last knot span (right-closed convention).
class BasisSystem {
 public:
  BasisSystem(int order, std::vector<double> interior_knots, double t_min, double t_max);

  /// One interior knot at every interior sampling point, which gives
  /// size() == grid.size() + order - 2.
  static BasisSystem from_grid(std::span<const double> time_grid, int order = 4);

  int order() const noexcept { return order_; }
  int size() const noexcept { return size_; }
  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }
  const std::vector<double>& full_knots() const noexcept { return knots_; }

  /// Values of all basis functions (or their derivative of order `deriv`)
  /// at t. Throws OutOfDomain / DerivativeOrderTooHigh.
  Vector eval(double t, int deriv = 0) const;

  /// Writes the `order` potentially nonzero entries of eval(t, deriv) into
  /// `out` and returns the index of the first one.
  int eval_nonzero(double t, int deriv, std::span<double> out) const;

  /// grid.size() x size() matrix whose row j is eval(grid[j], deriv).
  Matrix design_matrix(std::span<const double> grid, int deriv = 0) const;

  /// Gram matrix of the deriv-th derivatives, R_jk = integral of
  /// phi_j^(deriv) * phi_k^(deriv) over the domain (exact quadrature).
  Matrix roughness_penalty(int deriv) const;

  /// Rows hold the jump of phi^(order-1) across the first and the last
  /// interior knot (one row if they coincide, none without interior knots).
  /// J c = 0 is the not-a-knot end condition.
  Matrix end_jump_rows() const;

  bool operator==(const BasisSystem& other) const = default;

 private:
  int find_span(double t) const;

  int order_;
  int size_;
  double t_min_;
  double t_max_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

/// Coefficients of one curve in a shared basis.
struct CoefficientVector {
  std::shared_ptr<const BasisSystem> basis;
  Vector values;

  /// Pointwise x^(deriv)(t) = sum_s c_s phi_s^(deriv)(t).
  Vector eval(std::span<const double> t_grid, int deriv = 0) const;
};

struct FitOptions {
  // Weight of the end-jump penalty, relative to trace(B'B)/trace(J'J) so the
  // same value behaves alike for any grid length or domain. With one knot
  // per sample the minimiser is the not-a-knot interpolant for any value
  // > 0; the weight then only affects conditioning.
  double penalty = 1e-2;
};

/// Penalised least-squares fitter for a fixed basis and sampling grid:
///   min_c ||y - B c||^2 + lambda * ||J c||^2,  J = end_jump_rows()
/// The system matrix B'B + lambda J'J is factored once (Cholesky, with a
/// diagonal jitter retry up to 1e-6 relative) and reused for every curve.
class CurveFitter {
 public:
  CurveFitter(std::shared_ptr<const BasisSystem> basis, std::vector<double> time_grid,
              FitOptions options = {});

  const std::shared_ptr<const BasisSystem>& basis() const noexcept { return basis_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const FitOptions& options() const noexcept { return options_; }

  /// Design matrix of derivative order deriv (0..2 are cached).
  const Matrix& design(int deriv) const;

  Vector fit(std::span<const double> samples) const;
  Vector fit(const Eigen::Ref<const Vector>& samples) const;

  /// Row-wise fit: N x T values to N x S coefficients.
  Matrix fit_rows(const Matrix& values) const;

 private:
  struct Factor;
  std::shared_ptr<const BasisSystem> basis_;
  std::vector<double> grid_;
  FitOptions options_;
  std::vector<Matrix> designs_;
  std::shared_ptr<const Factor> factor_;
};

/// Free-function forms of the fitter and evaluator.
CoefficientVector fit_curve(std::shared_ptr<const BasisSystem> basis,
                            std::span<const double> time_grid, std::span<const double> samples,
                            FitOptions options = {});
Vector eval_curve(const CoefficientVector& coeffs, std::span<const double> t_grid, int deriv = 0);

/// n equispaced points on [lo, hi], endpoints included.
std::vector<double> equispaced_grid(std::size_t n, double lo = 0.0, double hi = 1.0);

}  // namespace eftc
