#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subsea/grid.hpp"
#include "subsea/kinematics.hpp"
#include "subsea/parallel.hpp"
#include "subsea/planner.hpp"
#include "subsea/probgrid.hpp"
#include "subsea/random.hpp"

namespace subsea {

struct FilterParticle {
  VehicleState state;
  double weight = 0.0;
  std::uint64_t key = 0;  ///< selects the particle's disturbance stream
};

/// Weighted particle cloud. Weights sum to 1.
struct FilterState {
  std::vector<FilterParticle> particles;
  double t_s = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return particles.size(); }
};

/// Equal-weight cloud from a set of states. Particle i gets key i.
inline FilterState make_filter_state(std::span<const VehicleState> states, double t_s) {
  if (states.size() < 2) throw std::invalid_argument("filter: need at least two particles");
  FilterState fs;
  fs.t_s = t_s;
  const double w = 1.0 / static_cast<double>(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto s = states[i];
    s.t_s = t_s;
    fs.particles.push_back({s, w, i});
  }
  return fs;
}

/// One look at the grid: which cells were searched (with their PD) and
/// whether the target was seen.
struct Observation {
  std::size_t interval = 0;
  std::vector<std::pair<CellId, double>> searched;
  bool detected = false;
  std::optional<CellId> detection_cell;
};

/// 1 / sum(w^2)
inline double effective_sample_size(const FilterState& state) {
  double sq = 0.0;
  for (const auto& p : state.particles) sq += p.weight * p.weight;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

/// Advances every particle by dt through the kinematics model. Particle
/// disturbances come from stream.derive(key), so repeated predictions over
/// the same times reproduce the same motion. Weights are untouched.
inline FilterState pf_predict(const FilterState& state, const ScenarioParams& params, double dt_s,
                              const Stream& stream, unsigned threads = 1) {
  if (!(dt_s >= 0.0)) throw std::invalid_argument("filter predict: dt must be >= 0");
  FilterState next = state;
  next.t_s = state.t_s + dt_s;
  parallel_for(next.particles.size(), threads, [&](std::size_t i) {
    auto& p = next.particles[i];
    p.state.t_s = state.t_s;
    p.state = advance_state(p.state, params, stream.derive(p.key), next.t_s);
    p.state.t_s = next.t_s;
  });
  return next;
}

namespace detail {

inline void normalize_weights(FilterState& state, const char* what) {
  double total = 0.0;
  for (const auto& p : state.particles) total += p.weight;
  if (!(total > 0.0)) throw std::domain_error(std::string(what) + ": total particle weight is zero");
  for (auto& p : state.particles) p.weight /= total;
}

}  // namespace detail

/// Reweights by the observation likelihood. Particles are located with
/// nearest_cell, the same rule the field estimate uses.
///
/// Miss: weights in each searched cell are scaled by (1 - PD).
/// Detection: weights in the detection cell are scaled by its PD, all
/// others are zeroed.
inline FilterState pf_update(const FilterState& state, const Observation& obs, const GridSpec& grid) {
  std::vector<double> factor(grid.cell_count(), 1.0);
  for (const auto& [cell, pd] : obs.searched) {
    if (!(pd > 0.0 && pd <= 1.0)) throw std::invalid_argument("filter update: PD must be in (0, 1]");
    if (!grid.contains(cell)) throw std::out_of_range("filter update: searched cell outside grid");
  }
  if (obs.detected) {
    if (!obs.detection_cell || !grid.contains(*obs.detection_cell))
      throw std::invalid_argument("filter update: detection needs a valid cell");
    double pd = 1.0;
    for (const auto& [cell, p] : obs.searched)
      if (cell == *obs.detection_cell) pd = p;
    std::fill(factor.begin(), factor.end(), 0.0);
    factor[obs.detection_cell->value] = pd;
  } else {
    for (const auto& [cell, pd] : obs.searched) factor[cell.value] *= 1.0 - pd;
  }
  FilterState next = state;
  for (auto& p : next.particles)
    p.weight *= factor[nearest_cell(grid, p.state.position.x, p.state.position.y).value];
  detail::normalize_weights(next, "filter update");
  return next;
}

/// Systematic resampling when ESS < ess_threshold * P; otherwise the state
/// is returned unchanged. Survivors get fresh keys so copies of one parent
/// do not share a disturbance stream.
inline FilterState pf_resample(const FilterState& state, double ess_threshold, const Stream& stream) {
  const std::size_t n = state.size();
  if (n == 0) throw std::invalid_argument("filter resample: empty state");
  if (!(effective_sample_size(state) < ess_threshold * static_cast<double>(n))) return state;

  FilterState next;
  next.t_s = state.t_s;
  next.particles.reserve(n);
  const double step = 1.0 / static_cast<double>(n);
  const double u0 = stream.uniform_at(0) * step;
  double cumulative = state.particles[0].weight;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) * step;
    while (u > cumulative && j + 1 < n) cumulative += state.particles[++j].weight;
    auto p = state.particles[j];
    p.weight = step;
    p.key = stream.derive(i + 1).key();
    next.particles.push_back(p);
  }
  return next;
}

/// Per-cell sum of particle weights.
inline ProbabilityField pf_field_estimate(const FilterState& state, const GridSpec& grid) {
  std::vector<double> w(grid.cell_count(), 0.0);
  for (const auto& p : state.particles)
    w[nearest_cell(grid, p.state.position.x, p.state.position.y).value] += p.weight;
  return ProbabilityField{grid, std::move(w)};
}

struct FilterMissionConfig {
  std::vector<SonarAsset> sonars;
  SearchSchedule schedule;
  Policy policy = Policy::greedy;
  SelectionOptions selection;
  double ess_threshold = 0.5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct FilterMissionResult {
  std::vector<ProbabilityField> estimates;  ///< posterior field after each interval's look
  std::vector<MissionLogEntry> log;
  std::optional<std::size_t> detected_in;
  std::vector<double> ess;  ///< before resampling, per interval
};

/// Tracks one moving target with the particle filter. The cloud starts from
/// `initial` at time 0; each interval the cloud and the target are predicted
/// to the interval midpoint, sonars pick cells from the filter's field
/// estimate, the look updates the cloud, and the cloud is resampled.
/// The target follows its own trajectory drawn from Stream{seed}.derive(0).
inline FilterMissionResult run_filter_mission(const FilterState& initial, const ScenarioParams& target_params,
                                              const ScenarioParams& filter_params, const GridSpec& grid,
                                              const FilterMissionConfig& config) {
  if (config.sonars.empty()) throw std::invalid_argument("filter mission: need at least one sonar");
  for (const auto& s : config.sonars) s.validate();
  const Stream root{config.seed};
  const Stream target_stream = root.derive(0);
  const Stream predict_stream = root.derive(1);
  const Stream resample_root = root.derive(2);
  const Stream detect_stream = root.derive(3);

  FilterMissionResult result;
  FilterState cloud = initial;
  VehicleState target = target_params.initial;
  target.t_s = 0.0;
  target.grounded = false;
  std::vector<std::optional<CellId>> positions(config.sonars.size());
  if (config.policy == Policy::greedy)
    for (std::size_t s = 0; s < config.sonars.size(); ++s) positions[s] = config.sonars[s].start;

  for (std::size_t k = 0; k < config.schedule.n; ++k) {
    const auto [a, b] = config.schedule.interval(k);
    const double mid = 0.5 * (a + b);
    target = advance_state(target, target_params, target_stream, mid);
    cloud = pf_predict(cloud, filter_params, mid - cloud.t_s, predict_stream, config.threads);
    const auto truth_cell = try_cell_of_point(grid, target.position.x, target.position.y);

    const auto field = pf_field_estimate(cloud, grid);
    const auto tasks = select_next_cells(field, config.sonars, positions, config.policy, config.selection);
    Observation obs;
    obs.interval = k;
    for (std::size_t s = 0; s < tasks.size(); ++s) {
      bool hit = false;
      if (tasks[s].cell) {
        const double pd = config.sonars[s].detection_prob;
        obs.searched.emplace_back(*tasks[s].cell, pd);
        if (truth_cell && *truth_cell == *tasks[s].cell) {
          hit = pd >= 1.0 ||
                detect_stream.uniform_at(static_cast<std::uint64_t>(k) * grid.cell_count() + truth_cell->value) < pd;
        }
      }
      if (hit) {
        obs.detected = true;
        obs.detection_cell = tasks[s].cell;
      }
      result.log.push_back({0, k, config.sonars[s].id, tasks[s].cell, hit});
      positions[s] = tasks[s].position;
    }
    try {
      cloud = pf_update(cloud, obs, grid);
    } catch (const std::domain_error&) {
      // Every particle was ruled out: fall back to the predicted cloud.
      result.estimates.push_back(field);
      result.ess.push_back(effective_sample_size(cloud));
      if (obs.detected) {
        result.detected_in = k;
        break;
      }
      continue;
    }
    result.estimates.push_back(pf_field_estimate(cloud, grid));
    result.ess.push_back(effective_sample_size(cloud));
    if (obs.detected) {
      result.detected_in = k;
      break;
    }
    cloud = pf_resample(cloud, config.ess_threshold, resample_root.derive(k));
  }
  return result;
}

/// `interval,cell,prob` for cells with nonzero probability.
inline std::string filter_estimates_to_csv(std::span<const ProbabilityField> estimates) {
  std::string out = "interval,cell,prob\n";
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const auto v = estimates[k].values();
    for (std::size_t c = 0; c < v.size(); ++c)
      if (v[c] > 0.0) out += std::to_string(k) + ',' + std::to_string(c) + ',' + csv::format_number(v[c]) + '\n';
  }
  return out;
}

}  // namespace subsea
