#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "subsea/environment.hpp"
#include "subsea/grid.hpp"
#include "subsea/parallel.hpp"
#include "subsea/random.hpp"
#include "subsea/vec3.hpp"

namespace subsea {

/// Buoyancy regime of an unpowered vehicle.
enum class Regime {
  drift,  ///< neutral buoyancy above the seabed: depth held, carried by the water
  sink,   ///< negative buoyancy: constant net downward acceleration until grounding
};

struct VehicleState {
  Vec3 position;  ///< m, z <= 0 below the surface
  Vec3 velocity;  ///< m/s
  double t_s = 0.0;
  bool grounded = false;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct ScenarioParams {
  Regime regime = Regime::drift;
  VehicleState initial;
  double sink_accel_mps2 = 0.0;                ///< magnitude, acts downward
  std::optional<double> terminal_speed_mps;    ///< cap on sink speed; none by default
  double seabed_depth_m = 4000.0;
  double dt_s = 1.0;
  double horizon_s = 1200.0;
  std::size_t record_every = 1;                ///< keep every k-th step in trajectories
  PerturbationSpec perturbation;
  std::shared_ptr<const CurrentField> current; ///< null means still water

  void validate() const {
    if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw std::invalid_argument("scenario: dt must be positive");
    if (!(horizon_s >= dt_s) || !std::isfinite(horizon_s))
      throw std::invalid_argument("scenario: horizon must be >= dt");
    if (!(seabed_depth_m > 0.0)) throw std::invalid_argument("scenario: seabed depth must be positive");
    if (!(sink_accel_mps2 >= 0.0)) throw std::invalid_argument("scenario: sink acceleration is a magnitude (>= 0)");
    if (terminal_speed_mps && !(*terminal_speed_mps > 0.0))
      throw std::invalid_argument("scenario: terminal speed must be positive");
    if (record_every < 1) throw std::invalid_argument("scenario: record_every must be >= 1");
    if (!initial.position.finite() || !initial.velocity.finite())
      throw std::invalid_argument("scenario: initial state must be finite");
    if (initial.position.z > 0.0 || initial.position.z < -seabed_depth_m)
      throw std::invalid_argument("scenario: initial depth must lie between seabed and surface");
    perturbation.validate();
  }

  [[nodiscard]] std::size_t step_count() const {
    return static_cast<std::size_t>(std::llround(horizon_s / dt_s));
  }
};

/// One explicit Euler step of length params.dt_s.
///
/// Horizontal velocity is the initial horizontal velocity plus the ambient
/// current plus the disturbance `perturb`. In the drift regime depth is held.
/// In the sink regime the vertical velocity gains a_z*dt downward and the
/// depth advances with the velocity at the start of the step. A step that
/// crosses the seabed is cut at the crossing: the returned state lies on the
/// seabed at the interpolated crossing time with zero velocity.
inline VehicleState step_state(const VehicleState& state, const ScenarioParams& params, const Vec3& perturb) {
  if (state.grounded) return state;
  const double dt = params.dt_s;
  Vec3 horizontal = params.initial.velocity.horizontal() + perturb.horizontal();
  if (params.current) horizontal += params.current->sample(state.position).horizontal();

  VehicleState next = state;
  next.t_s = state.t_s + dt;
  next.position.x += horizontal.x * dt;
  next.position.y += horizontal.y * dt;
  if (params.regime == Regime::drift) {
    next.velocity = horizontal;
    return next;
  }

  double vz = state.velocity.z - params.sink_accel_mps2 * dt;
  if (params.terminal_speed_mps) vz = std::max(vz, -*params.terminal_speed_mps);
  next.position.z += state.velocity.z * dt;
  next.velocity = {horizontal.x, horizontal.y, vz};

  if (next.position.z > 0.0) {
    next.position.z = 0.0;
    next.velocity.z = std::min(next.velocity.z, 0.0);
  }
  const double floor_z = -params.seabed_depth_m;
  if (next.position.z <= floor_z) {
    const double drop = state.position.z - next.position.z;
    const double frac = drop > 0.0 ? std::clamp((state.position.z - floor_z) / drop, 0.0, 1.0) : 1.0;
    next.t_s = state.t_s + frac * dt;
    next.position.x = state.position.x + horizontal.x * dt * frac;
    next.position.y = state.position.y + horizontal.y * dt * frac;
    next.position.z = floor_z;
    next.velocity = {};
    next.grounded = true;
  }
  return next;
}

namespace detail {

// Caches the disturbance for the current persistence window.
class PerturbationCursor {
 public:
  PerturbationCursor(const PerturbationSpec& spec, Stream stream) : spec_{spec}, stream_{stream} {}

  Vec3 at(double t_s) {
    const auto window = perturbation_window(spec_, t_s);
    if (!window_ || *window_ != window) {
      window_ = window;
      value_ = draw_perturbation(spec_, stream_, t_s);
    }
    return value_;
  }

 private:
  const PerturbationSpec& spec_;
  Stream stream_;
  std::optional<std::int64_t> window_;
  Vec3 value_;
};

}  // namespace detail

/// Steps `state` forward with params.dt_s until it reaches `until_s` (or
/// grounds). The disturbance comes from `stream` and depends only on the
/// absolute time of each step.
inline VehicleState advance_state(VehicleState state, const ScenarioParams& params, const Stream& stream,
                                  double until_s) {
  detail::PerturbationCursor perturb{params.perturbation, stream};
  const double base = state.t_s;
  const auto steps = static_cast<long long>(std::llround((until_s - base) / params.dt_s));
  for (long long k = 0; k < steps && !state.grounded; ++k) {
    const double t = base + static_cast<double>(k) * params.dt_s;
    state.t_s = t;
    state = step_state(state, params, perturb.at(t));
  }
  return state;
}

using Trajectory = std::vector<VehicleState>;

/// States at t = 0, dt, 2dt, ... horizon (thinned by params.record_every),
/// ending early at the grounding state. The last state is always kept.
inline Trajectory simulate_trajectory(const ScenarioParams& params, const Stream& stream) {
  params.validate();
  const std::size_t steps = params.step_count();
  detail::PerturbationCursor perturb{params.perturbation, stream};
  Trajectory out;
  out.reserve(steps / params.record_every + 2);
  VehicleState state = params.initial;
  state.t_s = 0.0;
  state.grounded = false;
  out.push_back(state);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * params.dt_s;
    state.t_s = t;
    state = step_state(state, params, perturb.at(t));
    const bool last = state.grounded || k + 1 == steps;
    if (last || (k + 1) % params.record_every == 0) out.push_back(state);
    if (state.grounded) break;
  }
  return out;
}

/// Monte Carlo run: N trajectories sharing one parameter set.
struct Ensemble {
  std::vector<Trajectory> trajectories;
  std::uint64_t master_seed = 0;
  double dt_s = 0.0;
  double horizon_s = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
  [[nodiscard]] const VehicleState& final_state(std::size_t i) const { return trajectories.at(i).back(); }
  [[nodiscard]] std::vector<Vec3> final_positions() const {
    std::vector<Vec3> out;
    out.reserve(trajectories.size());
    for (const auto& t : trajectories) out.push_back(t.back().position);
    return out;
  }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

/// Stream used by particle i of an ensemble seeded with master_seed.
inline Stream particle_stream(std::uint64_t master_seed, std::size_t i) {
  return Stream{master_seed}.derive(i);
}

/// N independent trajectories. Particle i draws from
/// particle_stream(master_seed, i), so the result does not depend on the
/// number of worker threads.
inline Ensemble run_ensemble(const ScenarioParams& params, std::size_t n, std::uint64_t master_seed,
                             unsigned threads = 0) {
  if (n < 1) throw std::invalid_argument("ensemble: need at least one particle");
  params.validate();
  Ensemble e;
  e.master_seed = master_seed;
  e.dt_s = params.dt_s;
  e.horizon_s = params.horizon_s;
  e.trajectories.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    e.trajectories[i] = simulate_trajectory(params, particle_stream(master_seed, i));
  });
  return e;
}

struct EnsembleSummary {
  Vec3 mean_final;
  Vec3 modal_final;  ///< mean final position of the particles in the densest grid cell
  CellId modal_cell;
  double max_horizontal_offset_m = 0.0;
  std::vector<Vec3> final_positions;
  std::vector<double> horizontal_offsets_m;
};

/// Statistics over final states. The modal position uses a histogram over
/// `grid` with out-of-domain points counted in the nearest boundary cell;
/// ties go to the lower cell label.
inline EnsembleSummary ensemble_summary(const Ensemble& e, const GridSpec& grid) {
  if (e.size() == 0) throw std::invalid_argument("ensemble summary: empty ensemble");
  EnsembleSummary s;
  s.final_positions = e.final_positions();
  std::vector<std::size_t> counts(grid.cell_count(), 0);
  std::vector<Vec3> cell_sum(grid.cell_count());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& start = e.trajectories[i].front().position;
    const auto& end = s.final_positions[i];
    s.mean_final += end;
    const double offset = horizontal_distance(start, end);
    s.horizontal_offsets_m.push_back(offset);
    s.max_horizontal_offset_m = std::max(s.max_horizontal_offset_m, offset);
    const auto cell = nearest_cell(grid, end.x, end.y);
    ++counts[cell.value];
    cell_sum[cell.value] += end;
  }
  s.mean_final *= 1.0 / static_cast<double>(e.size());
  const auto modal = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  s.modal_cell = CellId{modal};
  s.modal_final = cell_sum[modal] * (1.0 / static_cast<double>(counts[modal]));
  return s;
}

}  // namespace subsea
