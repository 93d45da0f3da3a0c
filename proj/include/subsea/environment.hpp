#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "subsea/csv.hpp"
#include "subsea/error.hpp"
#include "subsea/random.hpp"
#include "subsea/vec3.hpp"

namespace subsea {

/// Water velocity on a rectilinear lattice with uniform spacing per axis.
///
/// Node (i, j, k) sits at origin + (i*dx, j*dy, k*dz) and is stored at
/// index i + nx*(j + ny*k). Sampling interpolates trilinearly inside the
/// lattice hull and clamps each coordinate to the hull outside it, so a
/// query beyond the field returns the nearest node value.
class CurrentField {
 public:
  CurrentField(std::array<double, 3> origin, std::array<double, 3> spacing,
               std::array<std::size_t, 3> dims, std::vector<Vec3> velocity)
      : origin_{origin}, spacing_{spacing}, dims_{dims}, velocity_{std::move(velocity)} {
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] < 1) throw std::invalid_argument("current field: dimension must be >= 1");
      if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
        throw std::invalid_argument("current field: spacing must be positive");
      if (!std::isfinite(origin_[a])) throw std::invalid_argument("current field: origin not finite");
    }
    if (velocity_.size() != dims_[0] * dims_[1] * dims_[2])
      throw std::invalid_argument("current field: node count does not match dimensions");
    for (const auto& v : velocity_) {
      if (!v.finite()) throw std::invalid_argument("current field: non-finite velocity");
    }
  }

  /// Single-node field: the same velocity everywhere.
  static CurrentField uniform(const Vec3& velocity) {
    return CurrentField{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {1, 1, 1}, {velocity}};
  }

  [[nodiscard]] const std::array<double, 3>& origin() const noexcept { return origin_; }
  [[nodiscard]] const std::array<double, 3>& spacing() const noexcept { return spacing_; }
  [[nodiscard]] const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return velocity_.size(); }

  [[nodiscard]] const Vec3& node(std::size_t i, std::size_t j, std::size_t k) const {
    return velocity_.at(i + dims_[0] * (j + dims_[1] * k));
  }

  [[nodiscard]] Vec3 sample(const Vec3& p) const noexcept {
    std::array<std::size_t, 3> lo{};
    std::array<double, 3> frac{};
    const std::array<double, 3> coords{p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] == 1) continue;
      const double top = static_cast<double>(dims_[a] - 1);
      const double f = std::clamp((coords[a] - origin_[a]) / spacing_[a], 0.0, top);
      auto i = static_cast<std::size_t>(std::floor(f));
      if (i >= dims_[a] - 1) i = dims_[a] - 2;
      lo[a] = i;
      frac[a] = f - static_cast<double>(i);
    }
    Vec3 out;
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      std::array<std::size_t, 3> idx{};
      for (int a = 0; a < 3; ++a) {
        const bool upper = ((corner >> a) & 1) != 0;
        if (upper && dims_[a] == 1) {
          w = 0.0;
          break;
        }
        idx[a] = lo[a] + (upper ? 1 : 0);
        w *= upper ? frac[a] : 1.0 - frac[a];
      }
      if (w == 0.0) continue;
      out += velocity_[idx[0] + dims_[0] * (idx[1] + dims_[1] * idx[2])] * w;
    }
    return out;
  }

 private:
  std::array<double, 3> origin_;
  std::array<double, 3> spacing_;
  std::array<std::size_t, 3> dims_;
  std::vector<Vec3> velocity_;
};

inline Vec3 sample_current(const CurrentField& field, const Vec3& position) {
  return field.sample(position);
}

namespace detail {

struct AxisFit {
  double origin = 0.0;
  double spacing = 1.0;
  std::vector<double> values;
};

// Distinct coordinates along one axis must form an evenly spaced ladder.
inline AxisFit fit_axis(std::vector<double> coords, const char* name) {
  std::sort(coords.begin(), coords.end());
  AxisFit fit;
  const double scale = std::max(1.0, std::max(std::abs(coords.front()), std::abs(coords.back())));
  const double tol = 1e-9 * scale;
  for (double c : coords) {
    if (fit.values.empty() || c - fit.values.back() > tol) fit.values.push_back(c);
  }
  fit.origin = fit.values.front();
  if (fit.values.size() > 1) {
    fit.spacing = (fit.values.back() - fit.values.front()) / static_cast<double>(fit.values.size() - 1);
    for (std::size_t i = 0; i < fit.values.size(); ++i) {
      const double expected = fit.origin + fit.spacing * static_cast<double>(i);
      if (std::abs(fit.values[i] - expected) > 1e-6 * std::max(1.0, fit.spacing)) {
        throw ParseError(std::string("current field: ") + name +
                         " coordinates are not evenly spaced (non-rectilinear lattice)");
      }
    }
  }
  return fit;
}

}  // namespace detail

/// Reads a current field from CSV with header `x_m,y_m,z_m,u_mps,v_mps,w_mps`,
/// one row per lattice node. Every node of the lattice spanned by the distinct
/// coordinates must appear exactly once.
inline CurrentField load_current_field(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  static const std::vector<std::string> expected{"x_m", "y_m", "z_m", "u_mps", "v_mps", "w_mps"};
  if (table.header != expected)
    throw ParseError("current field: header must be x_m,y_m,z_m,u_mps,v_mps,w_mps");
  if (table.rows.empty()) throw ParseError("current field: no nodes");

  struct Row {
    Vec3 pos;
    Vec3 vel;
  };
  std::vector<Row> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto where = "line " + std::to_string(table.line_numbers[r]);
    if (f.size() != 6) throw ParseError("current field: " + where + " must have 6 fields");
    Row row{{csv::parse_double(f[0], where), csv::parse_double(f[1], where),
             csv::parse_double(f[2], where)},
            {csv::parse_double(f[3], where), csv::parse_double(f[4], where),
             csv::parse_double(f[5], where)}};
    if (!row.pos.finite() || !row.vel.finite())
      throw ParseError("current field: " + where + " has non-finite values");
    rows.push_back(row);
  }

  std::array<detail::AxisFit, 3> axes;
  const char* names[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    std::vector<double> coords;
    coords.reserve(rows.size());
    for (const auto& row : rows) coords.push_back(a == 0 ? row.pos.x : a == 1 ? row.pos.y : row.pos.z);
    axes[a] = detail::fit_axis(std::move(coords), names[a]);
  }
  const std::array<std::size_t, 3> dims{axes[0].values.size(), axes[1].values.size(),
                                        axes[2].values.size()};
  const std::size_t total = dims[0] * dims[1] * dims[2];

  std::vector<Vec3> velocity(total);
  std::vector<bool> seen(total, false);
  for (const auto& row : rows) {
    const std::array<double, 3> c{row.pos.x, row.pos.y, row.pos.z};
    std::array<std::size_t, 3> idx{};
    for (int a = 0; a < 3; ++a) {
      idx[a] = static_cast<std::size_t>(std::llround((c[a] - axes[a].origin) / axes[a].spacing));
    }
    const std::size_t flat = idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]);
    if (seen[flat]) {
      std::ostringstream os;
      os << "current field: duplicate node at " << row.pos;
      throw ParseError(os.str());
    }
    seen[flat] = true;
    velocity[flat] = row.vel;
  }
  if (rows.size() != total) {
    throw ParseError("current field: lattice needs " + std::to_string(total) + " nodes, file has " +
                     std::to_string(rows.size()) + " (missing nodes)");
  }
  return CurrentField{{axes[0].origin, axes[1].origin, axes[2].origin},
                      {axes[0].spacing, axes[1].spacing, axes[2].spacing},
                      dims,
                      std::move(velocity)};
}

/// Magnitude range and persistence of the stochastic current disturbance.
struct PerturbationSpec {
  double speed_min_mps = 0.05;
  double speed_max_mps = 0.30;
  double persistence_s = 600.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(speed_min_mps >= 0.0) || !(speed_min_mps <= speed_max_mps) || !std::isfinite(speed_max_mps))
      throw std::invalid_argument("perturbation: need 0 <= speed_min <= speed_max");
    if (!(persistence_s > 0.0) || !std::isfinite(persistence_s))
      throw std::invalid_argument("perturbation: persistence must be positive");
  }
};

/// Index of the persistence window that contains time t.
inline std::int64_t perturbation_window(const PerturbationSpec& spec, double t_s) {
  return static_cast<std::int64_t>(std::floor(t_s / spec.persistence_s));
}

/// Horizontal disturbance velocity at time t.
///
/// Piecewise constant: one speed (uniform in [speed_min, speed_max]) and one
/// heading (uniform in [0, 2*pi)) per persistence window, drawn from the
/// stream with the window index as counter. The same stream and time always
/// give the same vector. The vertical component is always 0.
inline Vec3 draw_perturbation(const PerturbationSpec& spec, const Stream& stream, double t_s) {
  const auto window = static_cast<std::uint64_t>(perturbation_window(spec, t_s));
  const double span = spec.speed_max_mps - spec.speed_min_mps;
  const double speed =
      span == 0.0 ? spec.speed_min_mps : spec.speed_min_mps + span * stream.uniform_at(2 * window);
  if (speed == 0.0) return {};
  const double heading = 2.0 * std::numbers::pi * stream.uniform_at(2 * window + 1);
  return {speed * std::cos(heading), speed * std::sin(heading), 0.0};
}

}  // namespace subsea
