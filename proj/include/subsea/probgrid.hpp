#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "subsea/csv.hpp"
#include "subsea/grid.hpp"
#include "subsea/kinematics.hpp"
#include "subsea/vec3.hpp"

namespace subsea {

/// Per-cell probability of containing the target. Always nonnegative and
/// normalized: the constructor rescales its input to sum to 1.
class ProbabilityField {
 public:
  ProbabilityField(GridSpec grid, std::vector<double> weights) : grid_{std::move(grid)}, p_{std::move(weights)} {
    if (p_.size() != grid_.cell_count())
      throw std::invalid_argument("probability field: weight count does not match grid");
    double total = 0.0;
    for (double w : p_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("probability field: weights must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw std::domain_error("probability field: all weights are zero");
    for (double& w : p_) w /= total;
  }

  [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return p_; }
  [[nodiscard]] double operator[](CellId id) const { return p_.at(id.value); }
  [[nodiscard]] std::size_t size() const noexcept { return p_.size(); }

  /// Highest-probability cell; ties go to the lower label.
  [[nodiscard]] CellId argmax() const {
    return CellId{static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin())};
  }

 private:
  GridSpec grid_;
  std::vector<double> p_;
};

/// Search intensity: lambda = m_p + ln(t / t_0). Any consistent time unit.
inline double lambda_of_time(double base_intensity, double t, double t0) {
  if (!(t0 > 0.0)) throw std::invalid_argument("lambda: t0 must be positive");
  if (!(t >= t0)) throw std::invalid_argument("lambda: t must be >= t0");
  return base_intensity + std::log(t / t0);
}

/// Poisson probability mass, evaluated in log space.
inline double poisson_pmf(std::size_t k, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson: lambda must be positive");
  const double kd = static_cast<double>(k);
  return std::exp(-lambda + kd * std::log(lambda) - std::lgamma(kd + 1.0));
}

struct PoissonPriorParams {
  double lambda = 0.2;
  CellId center;
  std::size_t max_radius = 10;  ///< cells beyond this Manhattan distance get zero

  /// Parameters with lambda taken from the time law of lambda_of_time.
  static PoissonPriorParams at_time(double base_intensity, double t, double t0, CellId center,
                                    std::size_t max_radius) {
    return {lambda_of_time(base_intensity, t, t0), center, max_radius};
  }
};

/// Ring-shared Poisson prior: a cell at Manhattan distance d from the centre
/// gets pmf(d; lambda) / N_d, where N_d counts the in-domain cells of that
/// ring, then the field is renormalized.
inline ProbabilityField build_poisson_prior(const GridSpec& grid, const PoissonPriorParams& params) {
  if (!grid.contains(params.center)) throw std::out_of_range("poisson prior: centre outside grid");
  if (!(params.lambda > 0.0)) throw std::invalid_argument("poisson prior: lambda must be positive");
  const std::size_t n = grid.cell_count();
  std::vector<std::size_t> dist(n);
  std::size_t max_d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = manhattan_distance(grid, params.center, CellId{i});
    max_d = std::max(max_d, dist[i]);
  }
  std::vector<std::size_t> ring_size(max_d + 1, 0);
  for (auto d : dist) ++ring_size[d];
  std::vector<double> ring_weight(max_d + 1, 0.0);
  for (std::size_t d = 0; d <= std::min(max_d, params.max_radius); ++d) {
    ring_weight[d] = poisson_pmf(d, params.lambda) / static_cast<double>(ring_size[d]);
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = ring_weight[dist[i]];
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw std::domain_error("poisson prior: every cell has zero weight");
  return ProbabilityField{grid, std::move(w)};
}

/// Histogram of positions over the grid; points outside the domain are
/// counted in the nearest boundary cell.
inline ProbabilityField field_from_positions(const GridSpec& grid, std::span<const Vec3> positions) {
  if (positions.empty()) throw std::invalid_argument("particle field: no positions");
  std::vector<double> counts(grid.cell_count(), 0.0);
  for (const auto& p : positions) counts[nearest_cell(grid, p.x, p.y).value] += 1.0;
  return ProbabilityField{grid, std::move(counts)};
}

/// Fraction of final particle positions in each cell.
inline ProbabilityField field_from_particles(const GridSpec& grid, const Ensemble& e) {
  if (e.size() == 0) throw std::invalid_argument("particle field: empty ensemble");
  const auto finals = e.final_positions();
  return field_from_positions(grid, finals);
}

/// Posterior after an unsuccessful search of `searched` with detection
/// probability pd: searched cells are scaled by (1 - pd), then the field is
/// renormalized. pd = 1 zeroes the searched cells.
inline ProbabilityField bayes_negative_update(const ProbabilityField& field, std::span<const CellId> searched,
                                              double pd) {
  if (!(pd > 0.0 && pd <= 1.0)) throw std::invalid_argument("bayes update: PD must be in (0, 1]");
  std::vector<double> w(field.values().begin(), field.values().end());
  std::vector<bool> hit(w.size(), false);
  for (const auto& c : searched) {
    if (!field.grid().contains(c)) throw std::out_of_range("bayes update: searched cell outside grid");
    if (hit[c.value]) continue;  // a cell searched twice in one look counts once
    hit[c.value] = true;
    w[c.value] *= 1.0 - pd;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw std::domain_error("bayes update: posterior has no mass left");
  return ProbabilityField{field.grid(), std::move(w)};
}

/// Field CSV: `cell,row,col,x_center_m,y_center_m,prob`.
inline std::string field_to_csv(const ProbabilityField& field) {
  std::string out = "cell,row,col,x_center_m,y_center_m,prob\n";
  const auto& g = field.grid();
  for (std::size_t i = 0; i < field.size(); ++i) {
    const CellId id{i};
    const auto [x, y] = cell_center(g, id);
    out += std::to_string(i) + ',' + std::to_string(g.row_of(id)) + ',' + std::to_string(g.col_of(id)) + ',' +
           csv::format_number(x) + ',' + csv::format_number(y) + ',' + csv::format_number(field[id]) + '\n';
  }
  return out;
}

/// Reads a field CSV written by field_to_csv and checks it against `grid`.
inline ProbabilityField field_from_csv(const GridSpec& grid, const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  static const std::vector<std::string> expected{"cell", "row", "col", "x_center_m", "y_center_m", "prob"};
  if (table.header != expected) throw ParseError("field csv: unexpected header in '" + path.string() + "'");
  if (table.rows.size() != grid.cell_count())
    throw ParseError("field csv: expected " + std::to_string(grid.cell_count()) + " cells, found " +
                     std::to_string(table.rows.size()));
  std::vector<double> w(grid.cell_count(), 0.0);
  std::vector<bool> seen(grid.cell_count(), false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto where = "field csv line " + std::to_string(table.line_numbers[r]);
    if (f.size() != 6) throw ParseError(where + ": expected 6 fields");
    const auto cell = csv::parse_integer(f[0], where);
    if (cell < 0 || static_cast<std::size_t>(cell) >= grid.cell_count() || seen[static_cast<std::size_t>(cell)])
      throw ParseError(where + ": bad or duplicate cell label");
    seen[static_cast<std::size_t>(cell)] = true;
    w[static_cast<std::size_t>(cell)] = csv::parse_double(f[5], where);
  }
  try {
    return ProbabilityField{grid, std::move(w)};
  } catch (const std::exception& e) {
    throw ParseError(std::string("field csv: ") + e.what());
  }
}

}  // namespace subsea
