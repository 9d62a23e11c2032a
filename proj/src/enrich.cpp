#include "eftc/enrich.hpp"
#include "eftc/error.hpp"
#include "eftc/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace eftc {

void CurveSet::validate() const {
  EFTC_REQUIRE(values.rows() == static_cast<Eigen::Index>(labels.size()),
               ErrorCode::DimensionMismatch, "curve count differs from label count");
  EFTC_REQUIRE(values.cols() == static_cast<Eigen::Index>(time_grid.size()),
               ErrorCode::DimensionMismatch, "curve length differs from time grid length");
  EFTC_REQUIRE(values.allFinite(), ErrorCode::NonFiniteInput, "curve values must be finite");
  for (int y : labels) {
    EFTC_REQUIRE(y >= 0 && y < n_classes, ErrorCode::InvalidParam,
                 "label " + std::to_string(y) + " outside 0.." + std::to_string(n_classes - 1));
  }
}

std::string_view block_tag(Block b) noexcept {
  switch (b) {
    case Block::Orig: return "ORIG";
    case Block::D1: return "D1";
    case Block::D2: return "D2";
    case Block::Curv: return "CURV";
    case Block::Radius: return "RADIUS";
    case Block::Elast: return "ELAST";
  }
  return "?";
}

Block parse_block(std::string_view tag) {
  std::string up(tag);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Block b : kAllBlocks)
    if (block_tag(b) == up) return b;
  throw Error(ErrorCode::InvalidParam, "unknown block tag '" + std::string(tag) + "'");
}

std::vector<Block> parse_block_list(std::string_view list) {
  std::string lower(list);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "all") return {kAllBlocks.begin(), kAllBlocks.end()};
  std::vector<Block> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    if (comma > pos) out.push_back(parse_block(list.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  EFTC_REQUIRE(!out.empty(), ErrorCode::InvalidParam, "empty block list");
  return out;
}

BlockLayout::BlockLayout(std::vector<Block> blocks, int basis_size)
    : blocks_(std::move(blocks)), basis_size_(basis_size) {
  EFTC_REQUIRE(basis_size_ > 0, ErrorCode::InvalidParam, "basis size must be positive");
  std::sort(blocks_.begin(), blocks_.end());
  blocks_.erase(std::unique(blocks_.begin(), blocks_.end()), blocks_.end());
  EFTC_REQUIRE(!blocks_.empty(), ErrorCode::InvalidParam, "layout needs at least one block");
}

bool BlockLayout::contains(Block b) const noexcept {
  return std::find(blocks_.begin(), blocks_.end(), b) != blocks_.end();
}

std::pair<int, int> BlockLayout::range(Block b) const {
  auto it = std::find(blocks_.begin(), blocks_.end(), b);
  EFTC_REQUIRE(it != blocks_.end(), ErrorCode::InvalidParam,
               "block " + std::string(block_tag(b)) + " not in layout");
  const int begin = static_cast<int>(it - blocks_.begin()) * basis_size_;
  return {begin, begin + basis_size_};
}

int BlockLayout::column(Block b, int basis_index) const {
  EFTC_REQUIRE(basis_index >= 0 && basis_index < basis_size_, ErrorCode::InvalidParam,
               "basis index out of range");
  return range(b).first + basis_index;
}

Block BlockLayout::block_of(int column) const {
  EFTC_REQUIRE(column >= 0 && column < width(), ErrorCode::InvalidParam,
               "column " + std::to_string(column) + " outside layout");
  return blocks_[static_cast<std::size_t>(column / basis_size_)];
}

int BlockLayout::basis_index_of(int column) const {
  EFTC_REQUIRE(column >= 0 && column < width(), ErrorCode::InvalidParam,
               "column " + std::to_string(column) + " outside layout");
  return column % basis_size_;
}

std::string BlockLayout::column_name(int column) const {
  return std::string(block_tag(block_of(column))) + "_" + std::to_string(basis_index_of(column) + 1);
}

ColumnScaling ColumnScaling::fit(const Matrix& features) {
  ColumnScaling s;
  const auto n = static_cast<double>(features.rows());
  EFTC_REQUIRE(features.rows() > 0, ErrorCode::EmptyInput, "cannot standardise zero rows");
  s.mean = features.colwise().mean().transpose();
  s.scale.resize(features.cols());
  for (Eigen::Index k = 0; k < features.cols(); ++k) {
    const double var = (features.col(k).array() - s.mean[k]).square().sum() / n;
    s.scale[k] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

void ColumnScaling::apply(Matrix& features) const {
  EFTC_REQUIRE(features.cols() == mean.size(), ErrorCode::DimensionMismatch,
               "scaling width differs from matrix width");
  for (Eigen::Index k = 0; k < features.cols(); ++k)
    features.col(k) = (features.col(k).array() - mean[k]) / scale[k];
}

namespace {

void require_floor(double floor) {
  EFTC_REQUIRE(std::isfinite(floor) && floor > 0.0, ErrorCode::InvalidFloor,
               "floor must be > 0, got " + std::to_string(floor));
}

double curvature(double d1, double d2) {
  return std::abs(d2) / std::pow(1.0 + d1 * d1, 1.5);
}

double elasticity(double x, double d1, double t, double floor) {
  const double clamped = std::abs(x) < floor ? (std::signbit(x) ? -floor : floor) : x;
  return d1 * t / clamped;
}

}  // namespace

Vector pointwise_curvature(const CoefficientVector& coeffs, std::span<const double> t_grid) {
  const Vector d1 = coeffs.eval(t_grid, 1);
  const Vector d2 = coeffs.eval(t_grid, 2);
  return d1.binaryExpr(d2, [](double a, double b) { return curvature(a, b); });
}

Vector pointwise_radius(const Eigen::Ref<const Vector>& kappa, double floor) {
  require_floor(floor);
  return kappa.unaryExpr([floor](double k) { return 1.0 / std::max(k, floor); });
}

Vector pointwise_elasticity(const CoefficientVector& coeffs, std::span<const double> t_grid,
                            double floor) {
  require_floor(floor);
  const Vector x = coeffs.eval(t_grid, 0);
  const Vector d1 = coeffs.eval(t_grid, 1);
  Vector e(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    e[j] = elasticity(x[j], d1[j], t_grid[static_cast<std::size_t>(j)], floor);
  return e;
}

Matrix refit_block(const CurveFitter& fitter, const Matrix& pointwise_values) {
  return fitter.fit_rows(pointwise_values);
}

Matrix refit_block(std::shared_ptr<const BasisSystem> basis, std::span<const double> t_grid,
                   const Matrix& pointwise_values, FitOptions options) {
  EFTC_REQUIRE(pointwise_values.cols() == static_cast<Eigen::Index>(t_grid.size()),
               ErrorCode::DimensionMismatch, "pointwise values do not match grid length");
  CurveFitter fitter(std::move(basis), std::vector<double>(t_grid.begin(), t_grid.end()), options);
  return fitter.fit_rows(pointwise_values);
}

CurveFitter make_enrichment_fitter(const std::vector<double>& time_grid, FitOptions options) {
  EFTC_REQUIRE(time_grid.size() >= 4, ErrorCode::TooFewPoints,
               "enrichment needs at least 4 sampling points, got " +
                   std::to_string(time_grid.size()));
  auto basis = std::make_shared<const BasisSystem>(BasisSystem::from_grid(time_grid, 4));
  return CurveFitter(std::move(basis), time_grid, options);
}

EnrichedMatrix build_enriched(const CurveSet& curves, const EnrichmentOptions& options,
                              const CurveFitter* fitter,
                              const std::optional<ColumnScaling>& scaling) {
  EFTC_REQUIRE(curves.length() >= 4, ErrorCode::TooFewPoints,
               "enrichment needs at least 4 sampling points, got " +
                   std::to_string(curves.length()));
  curves.validate();
  require_floor(options.curvature_floor);
  require_floor(options.elasticity_floor);

  std::optional<CurveFitter> own;
  if (fitter == nullptr) {
    own.emplace(make_enrichment_fitter(curves.time_grid, options.fit));
    fitter = &*own;
  }
  EFTC_REQUIRE(fitter->grid() == curves.time_grid, ErrorCode::GridMismatch,
               "curves are not sampled on the fitter's grid");

  const BlockLayout layout(options.blocks, fitter->basis()->size());
  const Eigen::Index N = curves.values.rows();
  const Eigen::Index T = curves.values.cols();
  const int S = layout.basis_size();

  auto needs = [&](Block b) { return layout.contains(b); };
  const bool need_geometry = needs(Block::Curv) || needs(Block::Radius);
  const bool need_x0 = needs(Block::Elast);
  const bool need_x1 = needs(Block::D1) || need_geometry || needs(Block::Elast);
  const bool need_x2 = needs(Block::D2) || need_geometry;

  EnrichedMatrix out;
  out.layout = layout;
  out.labels = curves.labels;
  out.n_classes = curves.n_classes;
  out.basis = fitter->basis();
  out.features.resize(N, layout.width());

  // Each curve is processed on its own so its row never depends on the
  // rest of the batch (or on the thread count).
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    const Vector c = fitter->fit(Vector(curves.values.row(i).transpose()));
    Vector x0, x1, x2, kappa;
    if (need_x0) x0 = fitter->design(0) * c;
    if (need_x1) x1 = fitter->design(1) * c;
    if (need_x2) x2 = fitter->design(2) * c;
    if (need_geometry) kappa = x1.binaryExpr(x2, [](double a, double b) { return curvature(a, b); });

    for (Block b : layout.blocks()) {
      Vector coeffs;
      switch (b) {
        case Block::Orig: coeffs = c; break;
        case Block::D1: coeffs = fitter->fit(x1); break;
        case Block::D2: coeffs = fitter->fit(x2); break;
        case Block::Curv: coeffs = fitter->fit(kappa); break;
        case Block::Radius: {
          const double floor = options.curvature_floor;
          coeffs = fitter->fit(Vector(kappa.unaryExpr([floor](double k) { return 1.0 / std::max(k, floor); })));
          break;
        }
        case Block::Elast: {
          Vector e(T);
          for (Eigen::Index j = 0; j < T; ++j)
            e[j] = elasticity(x0[j], x1[j], curves.time_grid[static_cast<std::size_t>(j)],
                              options.elasticity_floor);
          coeffs = fitter->fit(e);
          break;
        }
      }
      out.features.row(i).segment(layout.range(b).first, S) = coeffs.transpose();
    }
  });

  if (options.standardize) {
    out.scaling = scaling ? *scaling : ColumnScaling::fit(out.features);
    out.scaling->apply(out.features);
  }
  return out;
}

}  // namespace eftc
