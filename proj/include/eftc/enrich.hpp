#pragma once

#include "eftc/basis.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eftc {

/// N curves sampled on one shared time grid, with class labels 0..C-1.
struct CurveSet {
  std::string name;
  std::vector<double> time_grid;
  Matrix values;  // N x T
  std::vector<int> labels;
  int n_classes = 0;
  // Original label value of each class index (ascending); kept so files
  // written back out carry the labels they were read with.
  std::vector<double> class_values;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t length() const noexcept { return time_grid.size(); }

  /// Throws DimensionMismatch / NonFiniteInput / InvalidParam on a broken set.
  void validate() const;
};

/// Feature blocks in their fixed concatenation order.
enum class Block { Orig, D1, D2, Curv, Radius, Elast };

inline constexpr std::array<Block, 6> kAllBlocks{Block::Orig, Block::D1,     Block::D2,
                                                 Block::Curv, Block::Radius, Block::Elast};

std::string_view block_tag(Block b) noexcept;
/// Parses "ORIG", "D1", "D2", "CURV", "RADIUS", "ELAST" (case-insensitive).
Block parse_block(std::string_view tag);
/// Comma-separated tag list, or "all".
std::vector<Block> parse_block_list(std::string_view list);

/// Column layout of an enriched matrix: one S-wide slice per present block,
/// in canonical order.
class BlockLayout {
 public:
  BlockLayout() = default;
  BlockLayout(std::vector<Block> blocks, int basis_size);

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  int basis_size() const noexcept { return basis_size_; }
  int width() const noexcept { return static_cast<int>(blocks_.size()) * basis_size_; }

  bool contains(Block b) const noexcept;
  /// [begin, end) columns of block b; throws InvalidParam if absent.
  std::pair<int, int> range(Block b) const;
  int column(Block b, int basis_index) const;
  Block block_of(int column) const;
  int basis_index_of(int column) const;  // 0-based
  /// "<TAG>_<s>" with 1-based s, as used in CSV headers.
  std::string column_name(int column) const;

  bool operator==(const BlockLayout&) const = default;

 private:
  std::vector<Block> blocks_;
  int basis_size_ = 0;
};

/// Per-column affine scaling (z-score) learned on training rows.
struct ColumnScaling {
  Vector mean;
  Vector scale;

  static ColumnScaling fit(const Matrix& features);
  void apply(Matrix& features) const;
};

struct EnrichedMatrix {
  Matrix features;  // N x (blocks * S)
  BlockLayout layout;
  std::vector<int> labels;
  int n_classes = 0;
  std::shared_ptr<const BasisSystem> basis;  // may be null for matrices read from CSV
  std::optional<ColumnScaling> scaling;

  std::size_t rows() const noexcept { return labels.size(); }
};

struct EnrichmentOptions {
  std::vector<Block> blocks{kAllBlocks.begin(), kAllBlocks.end()};
  double curvature_floor = 1e-6;   // kappa_min for the radius block
  double elasticity_floor = 1e-6;  // x_min for the elasticity block
  bool standardize = false;
  FitOptions fit{};
};

/// kappa(t) = |x''| / (1 + x'^2)^(3/2) on the grid.
Vector pointwise_curvature(const CoefficientVector& coeffs, std::span<const double> t_grid);

/// R(t) = 1 / max(kappa(t), floor). Throws InvalidFloor for floor <= 0.
Vector pointwise_radius(const Eigen::Ref<const Vector>& curvature, double floor);

/// E(t) = x'(t) t / x(t), with |x| clamped to >= floor keeping the sign of
/// x (zero counts as positive). Throws InvalidFloor for floor <= 0.
Vector pointwise_elasticity(const CoefficientVector& coeffs, std::span<const double> t_grid,
                            double floor);

/// Row-wise refit of N x M pointwise values into the shared basis.
Matrix refit_block(const CurveFitter& fitter, const Matrix& pointwise_values);
Matrix refit_block(std::shared_ptr<const BasisSystem> basis, std::span<const double> t_grid,
                   const Matrix& pointwise_values, FitOptions options = {});

/// Builds the enriched coefficient matrix for a curve set. Pass the fitter
/// built on the training grid to represent test curves in the same basis.
/// With options.standardize, `scaling` (training statistics) is applied if
/// given, otherwise learned from these curves and stored in the result.
EnrichedMatrix build_enriched(const CurveSet& curves, const EnrichmentOptions& options,
                              const CurveFitter* fitter = nullptr,
                              const std::optional<ColumnScaling>& scaling = std::nullopt);

/// Cubic basis and fitter for a training grid (T >= 4).
CurveFitter make_enrichment_fitter(const std::vector<double>& time_grid, FitOptions options = {});

}  // namespace eftc
