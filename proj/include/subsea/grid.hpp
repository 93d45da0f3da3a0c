#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subsea {

/// Linear label of a grid cell: col + cols * row.
struct CellId {
  std::size_t value = 0;
  friend constexpr auto operator<=>(const CellId&, const CellId&) = default;
};

/// Square-cell search grid over a horizontal rectangle.
///
/// The domain is [origin, origin + cols*G_s) x [origin, origin + rows*G_s)
/// with cols = floor(x_max/G_s) and rows = floor(y_max/G_s). Coordinates
/// passed to the free functions below are absolute; the origin shift makes
/// them nonnegative before the floor-based labelling is applied.
class GridSpec {
 public:
  GridSpec(double cell_size_m, double x_max_m, double y_max_m, double origin_x_m = 0.0,
           double origin_y_m = 0.0)
      : cell_size_{cell_size_m}, x_max_{x_max_m}, y_max_{y_max_m}, origin_x_{origin_x_m},
        origin_y_{origin_y_m} {
    if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_))
      throw std::invalid_argument("grid: cell size must be positive");
    if (!std::isfinite(origin_x_) || !std::isfinite(origin_y_))
      throw std::invalid_argument("grid: origin must be finite");
    const double cols = std::floor(x_max_ / cell_size_ + 1e-9);
    const double rows = std::floor(y_max_ / cell_size_ + 1e-9);
    if (!(cols >= 1.0) || !(rows >= 1.0) || !std::isfinite(cols) || !std::isfinite(rows))
      throw std::invalid_argument("grid: domain must hold at least one cell per axis");
    cols_ = static_cast<std::size_t>(cols);
    rows_ = static_cast<std::size_t>(rows);
  }

  [[nodiscard]] double cell_size() const noexcept { return cell_size_; }
  [[nodiscard]] double x_max() const noexcept { return x_max_; }
  [[nodiscard]] double y_max() const noexcept { return y_max_; }
  [[nodiscard]] double origin_x() const noexcept { return origin_x_; }
  [[nodiscard]] double origin_y() const noexcept { return origin_y_; }
  /// Cells per row (M_g).
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cell_count() const noexcept { return cols_ * rows_; }

  [[nodiscard]] bool contains(CellId id) const noexcept { return id.value < cell_count(); }
  [[nodiscard]] std::size_t row_of(CellId id) const noexcept { return id.value / cols_; }
  [[nodiscard]] std::size_t col_of(CellId id) const noexcept { return id.value % cols_; }
  [[nodiscard]] CellId at(std::size_t row, std::size_t col) const {
    if (row >= rows_ || col >= cols_) throw std::out_of_range("grid: row/col out of range");
    return CellId{col + cols_ * row};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  double cell_size_;
  double x_max_;
  double y_max_;
  double origin_x_;
  double origin_y_;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
};

/// Cell label of a point, or nothing when the point is outside the domain.
inline std::optional<CellId> try_cell_of_point(const GridSpec& grid, double x, double y) {
  const double gx = (x - grid.origin_x()) / grid.cell_size();
  const double gy = (y - grid.origin_y()) / grid.cell_size();
  if (!(gx >= 0.0) || !(gy >= 0.0)) return std::nullopt;
  const double col = std::floor(gx);
  const double row = std::floor(gy);
  if (col >= static_cast<double>(grid.cols()) || row >= static_cast<double>(grid.rows()))
    return std::nullopt;
  return CellId{static_cast<std::size_t>(col) + grid.cols() * static_cast<std::size_t>(row)};
}

/// N_g = INT(x/G_s) + M_g * INT(y/G_s). Throws for points outside the domain.
inline CellId cell_of_point(const GridSpec& grid, double x, double y) {
  if (auto id = try_cell_of_point(grid, x, y)) return *id;
  throw std::out_of_range("grid: point (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") is outside the domain");
}

/// Like cell_of_point, but points outside the domain map to the nearest
/// boundary cell.
inline CellId nearest_cell(const GridSpec& grid, double x, double y) {
  const auto clamp_index = [](double g, std::size_t n) {
    if (!(g >= 0.0)) return std::size_t{0};
    const double f = std::floor(g);
    return f >= static_cast<double>(n) ? n - 1 : static_cast<std::size_t>(f);
  };
  const std::size_t col = clamp_index((x - grid.origin_x()) / grid.cell_size(), grid.cols());
  const std::size_t row = clamp_index((y - grid.origin_y()) / grid.cell_size(), grid.rows());
  return CellId{col + grid.cols() * row};
}

/// Centre of a cell in absolute coordinates:
/// x_G = (N_g % M_g) * G_s + G_s/2, y_G = INT(N_g / M_g) * G_s + G_s/2.
inline std::pair<double, double> cell_center(const GridSpec& grid, CellId id) {
  if (!grid.contains(id)) throw std::out_of_range("grid: cell id out of range");
  const double g = grid.cell_size();
  return {grid.origin_x() + static_cast<double>(grid.col_of(id)) * g + g / 2.0,
          grid.origin_y() + static_cast<double>(grid.row_of(id)) * g + g / 2.0};
}

/// |d row| + |d col| between two cells.
inline std::size_t manhattan_distance(const GridSpec& grid, CellId a, CellId b) {
  const auto diff = [](std::size_t p, std::size_t q) { return p > q ? p - q : q - p; };
  return diff(grid.row_of(a), grid.row_of(b)) + diff(grid.col_of(a), grid.col_of(b));
}

/// Squared centre-to-centre distance in cell units.
inline std::size_t cell_distance_squared(const GridSpec& grid, CellId a, CellId b) {
  const auto diff = [](std::size_t p, std::size_t q) { return p > q ? p - q : q - p; };
  const std::size_t dr = diff(grid.row_of(a), grid.row_of(b));
  const std::size_t dc = diff(grid.col_of(a), grid.col_of(b));
  return dr * dr + dc * dc;
}

/// In-domain cells at Manhattan distance exactly d from `center`, in
/// increasing label order.
inline std::vector<CellId> manhattan_ring_cells(const GridSpec& grid, CellId center, std::size_t d) {
  if (!grid.contains(center)) throw std::out_of_range("grid: ring centre out of range");
  std::vector<CellId> ring;
  const auto r0 = static_cast<long long>(grid.row_of(center));
  const auto c0 = static_cast<long long>(grid.col_of(center));
  const auto dd = static_cast<long long>(d);
  const auto rows = static_cast<long long>(grid.rows());
  const auto cols = static_cast<long long>(grid.cols());
  for (long long r = std::max(0LL, r0 - dd); r <= std::min(rows - 1, r0 + dd); ++r) {
    const long long rest = dd - std::llabs(r - r0);
    for (long long c : {c0 - rest, c0 + rest}) {
      if (c >= 0 && c < cols) ring.push_back(CellId{static_cast<std::size_t>(c + cols * r)});
      if (rest == 0) break;
    }
  }
  // Within one row the left cell precedes the right one, so labels ascend.
  return ring;
}

/// Cell edge from sweep geometry: G_s = W_s*turns - (W_s*O_i)*(turns - 1).
inline double grid_size_from_sweep(double swath_m, double overlap, int turns) {
  if (!(swath_m > 0.0)) throw std::invalid_argument("grid size: swath width must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("grid size: overlap must be in [0, 1)");
  if (turns < 1) throw std::invalid_argument("grid size: turns must be >= 1");
  const double t = turns;
  const double size = swath_m * t - swath_m * overlap * (t - 1.0);
  if (!(size > 0.0)) throw std::domain_error("grid size: non-positive result");
  return size;
}

/// Number of sweep legs a sonar covers in time t: v*t/G_s.
inline double turns_from_speed(double speed_mps, double time_s, double cell_size_m) {
  if (!(speed_mps > 0.0) || !(time_s > 0.0) || !(cell_size_m > 0.0))
    throw std::invalid_argument("turns: speed, time and cell size must be positive");
  return speed_mps * time_s / cell_size_m;
}

}  // namespace subsea
