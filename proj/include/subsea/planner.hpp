#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "subsea/csv.hpp"
#include "subsea/grid.hpp"
#include "subsea/kinematics.hpp"
#include "subsea/parallel.hpp"
#include "subsea/probgrid.hpp"
#include "subsea/random.hpp"

namespace subsea {

struct SonarAsset {
  int id = 0;
  double speed_mps = 0.5;
  double swath_m = 120.0;
  double overlap = 0.25;
  CellId start;
  double cell_time_s = 1800.0;   ///< time to search one cell (t_i)
  double detection_prob = 1.0;   ///< PD

  void validate() const {
    if (!(speed_mps > 0.0)) throw std::invalid_argument("sonar: speed must be positive");
    if (!(cell_time_s > 0.0)) throw std::invalid_argument("sonar: cell search time must be positive");
    if (!(detection_prob > 0.0 && detection_prob <= 1.0))
      throw std::invalid_argument("sonar: detection probability must be in (0, 1]");
  }
};

/// Cells a sonar can move per interval: floor(v * t_i / G_s).
inline std::size_t travel_radius(const SonarAsset& sonar, const GridSpec& grid) {
  return static_cast<std::size_t>(std::floor(sonar.speed_mps * sonar.cell_time_s / grid.cell_size() + 1e-9));
}

/// Search intervals [t_0 + k*t_i, t_0 + (k+1)*t_i] for k = 0 .. n-1.
struct SearchSchedule {
  double t0_s = 0.0;
  double ti_s = 1.0;
  std::size_t n = 1;

  [[nodiscard]] std::pair<double, double> interval(std::size_t k) const {
    if (k >= n) throw std::out_of_range("schedule: interval index out of range");
    const double kd = static_cast<double>(k);
    return {t0_s + kd * ti_s, t0_s + (kd + 1.0) * ti_s};
  }
  [[nodiscard]] double end_s() const { return t0_s + static_cast<double>(n) * ti_s; }
};

inline SearchSchedule build_schedule(double t0_s, double ti_s, std::size_t n) {
  if (!(t0_s >= 0.0)) throw std::invalid_argument("schedule: t0 must be >= 0");
  if (!(ti_s > 0.0)) throw std::invalid_argument("schedule: t_i must be positive");
  if (n < 1) throw std::invalid_argument("schedule: need at least one interval");
  return {t0_s, ti_s, n};
}

enum class Policy {
  greedy,  ///< highest posterior cell within travel range
  sweep,   ///< boustrophedon over a fixed band of rows, ignoring the posterior
};

struct SelectionOptions {
  bool teleport = false;  ///< drop the travel-radius constraint
};

/// What one sonar does in one interval.
struct SonarTask {
  std::optional<CellId> cell;      ///< searched cell; empty when the sonar idles
  std::optional<CellId> position;  ///< where the sonar ends the interval
};

namespace detail {

inline std::vector<std::size_t> id_order(std::span<const SonarAsset> sonars) {
  std::vector<std::size_t> order(sonars.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sonars[a].id < sonars[b].id; });
  return order;
}

// Boustrophedon order over rows [row_begin, row_end).
inline std::vector<CellId> lawnmower(const GridSpec& grid, std::size_t row_begin, std::size_t row_end) {
  std::vector<CellId> out;
  for (std::size_t r = row_begin; r < row_end; ++r) {
    const bool forward = (r - row_begin) % 2 == 0;
    for (std::size_t i = 0; i < grid.cols(); ++i) {
      out.push_back(grid.at(r, forward ? i : grid.cols() - 1 - i));
    }
  }
  return out;
}

}  // namespace detail

/// Rows assigned to the rank-th of `count` sweeping sonars.
inline std::pair<std::size_t, std::size_t> sweep_band(const GridSpec& grid, std::size_t rank, std::size_t count) {
  return {grid.rows() * rank / count, grid.rows() * (rank + 1) / count};
}

/// Assigns one cell per sonar for the next interval.
///
/// Greedy: sonars in id order each take the highest-probability positive
/// cell within travel range that no earlier sonar claimed this interval;
/// ties go to the nearer cell, then the lower label. A sonar with nothing in
/// range idles and transits one radius towards the best remaining cell.
///
/// Sweep: sonar of rank s (by id) mows the s-th of k equal row bands. Its
/// next cell follows its current position in the band order, or is the first
/// cell of the band when it has no position in the band yet. A sonar that
/// finished its band idles.
inline std::vector<SonarTask> select_next_cells(const ProbabilityField& field, std::span<const SonarAsset> sonars,
                                                std::span<const std::optional<CellId>> positions, Policy policy,
                                                const SelectionOptions& options = {}) {
  if (positions.size() != sonars.size()) throw std::invalid_argument("select: one position per sonar required");
  const auto& grid = field.grid();
  const auto p = field.values();
  const auto order = detail::id_order(sonars);
  std::vector<SonarTask> tasks(sonars.size());

  if (policy == Policy::sweep) {
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const std::size_t s = order[rank];
      const auto [r0, r1] = sweep_band(grid, rank, order.size());
      const auto path = detail::lawnmower(grid, r0, r1);
      tasks[s].position = positions[s];
      if (path.empty()) continue;
      std::size_t next = 0;
      if (positions[s]) {
        const auto it = std::find(path.begin(), path.end(), *positions[s]);
        if (it != path.end()) next = static_cast<std::size_t>(it - path.begin()) + 1;
      }
      if (next < path.size()) {
        tasks[s].cell = path[next];
        tasks[s].position = path[next];
      }
    }
    return tasks;
  }

  std::vector<bool> claimed(grid.cell_count(), false);
  // True when (pa, da, a) ranks before (pb, db, b).
  const auto better = [](double pa, std::size_t da, std::size_t a, double pb, std::size_t db, std::size_t b) {
    if (pa != pb) return pa > pb;
    if (da != db) return da < db;
    return a < b;
  };
  for (const std::size_t s : order) {
    if (!positions[s]) throw std::invalid_argument("select: greedy policy needs every sonar position");
    const CellId here = *positions[s];
    if (!grid.contains(here)) throw std::out_of_range("select: sonar position outside grid");
    const std::size_t radius = travel_radius(sonars[s], grid);
    const std::size_t reach = radius * radius;

    std::optional<std::size_t> best;
    std::size_t best_d = 0;
    std::optional<std::size_t> target;  // best positive cell regardless of range
    std::size_t target_d = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (claimed[c] || !(p[c] > 0.0)) continue;
      const std::size_t d = cell_distance_squared(grid, here, CellId{c});
      if (!target || better(p[c], d, c, p[*target], target_d, *target)) {
        target = c;
        target_d = d;
      }
      if (!options.teleport && d > reach) continue;
      if (!best || better(p[c], d, c, p[*best], best_d, *best)) {
        best = c;
        best_d = d;
      }
    }
    if (best) {
      claimed[*best] = true;
      tasks[s] = {CellId{*best}, CellId{*best}};
      continue;
    }
    tasks[s].position = here;
    if (!target) continue;
    // Transit: the reachable cell closest to the target.
    std::size_t hop = here.value;
    std::size_t hop_d = cell_distance_squared(grid, here, CellId{*target});
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (cell_distance_squared(grid, here, CellId{c}) > reach) continue;
      const std::size_t d = cell_distance_squared(grid, CellId{c}, CellId{*target});
      if (d < hop_d || (d == hop_d && c < hop)) {
        hop = c;
        hop_d = d;
      }
    }
    tasks[s].position = CellId{hop};
  }
  return tasks;
}

/// Hidden target that never moves.
struct FixedTruth {
  CellId cell;
};

/// Static target whose position is one uniform draw per replication from a
/// set of landing points (typically an ensemble's final positions).
struct LandingTruth {
  std::vector<Vec3> positions;
};

/// Target that keeps moving: each replication simulates a fresh trajectory
/// and the target's cell in interval k is its cell at the interval midpoint.
struct MovingTruth {
  ScenarioParams params;
};

using TruthModel = std::variant<FixedTruth, LandingTruth, MovingTruth>;

struct MissionConfig {
  std::vector<SonarAsset> sonars;
  SearchSchedule schedule;
  Policy policy = Policy::greedy;
  SelectionOptions selection;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool record_log = true;
};

/// Success probability against time, averaged over replications.
struct DetectionCurve {
  std::vector<double> t_s;           ///< t_0, then the end of every interval
  std::vector<double> cumulative;    ///< fraction detected by t_s[i]; starts at 0
  std::vector<double> per_interval;  ///< fraction first detected in interval k
  std::size_t replications = 0;
};

struct MissionLogEntry {
  std::size_t replication = 0;
  std::size_t interval = 0;
  int sonar = 0;
  std::optional<CellId> cell;
  bool detected = false;
};

struct MissionResult {
  DetectionCurve curve;
  std::vector<MissionLogEntry> log;
  std::vector<std::optional<std::size_t>> detection_interval;  ///< per replication
};

namespace detail {

struct ReplicationOutcome {
  std::optional<std::size_t> detected_in;
  std::vector<MissionLogEntry> log;
};

// Streams for replication `rep`: truth placement, truth motion, detection rolls.
inline Stream replication_stream(std::uint64_t seed, std::size_t rep) { return Stream{seed}.derive(rep); }

inline ReplicationOutcome run_replication(const ProbabilityField& prior, const TruthModel& truth,
                                          const MissionConfig& config, std::size_t rep) {
  const auto& grid = prior.grid();
  const Stream rs = replication_stream(config.seed, rep);
  const Stream detect_stream = rs.derive(2);

  std::optional<CellId> fixed_cell;
  const MovingTruth* moving = nullptr;
  VehicleState target;
  if (const auto* f = std::get_if<FixedTruth>(&truth)) {
    fixed_cell = f->cell;
  } else if (const auto* l = std::get_if<LandingTruth>(&truth)) {
    if (l->positions.empty()) throw std::invalid_argument("mission: landing truth has no positions");
    auto engine = rs.derive(0).engine();
    const auto& pos = l->positions[uniform_index(engine, l->positions.size())];
    fixed_cell = try_cell_of_point(grid, pos.x, pos.y);
  } else {
    moving = &std::get<MovingTruth>(truth);
    target = moving->params.initial;
    target.t_s = 0.0;
    target.grounded = false;
  }
  const Stream motion_stream = rs.derive(1);

  ReplicationOutcome out;
  ProbabilityField field = prior;
  std::vector<std::optional<CellId>> positions(config.sonars.size());
  if (config.policy == Policy::greedy) {
    for (std::size_t s = 0; s < config.sonars.size(); ++s) positions[s] = config.sonars[s].start;
  }

  for (std::size_t k = 0; k < config.schedule.n; ++k) {
    std::optional<CellId> truth_cell = fixed_cell;
    if (moving) {
      const auto [a, b] = config.schedule.interval(k);
      target = advance_state(target, moving->params, motion_stream, 0.5 * (a + b));
      truth_cell = try_cell_of_point(grid, target.position.x, target.position.y);
    }

    const auto tasks = select_next_cells(field, config.sonars, positions, config.policy, config.selection);
    bool found = false;
    std::vector<double> w(field.values().begin(), field.values().end());
    for (std::size_t s = 0; s < tasks.size(); ++s) {
      const auto& task = tasks[s];
      bool hit = false;
      if (task.cell) {
        const double pd = config.sonars[s].detection_prob;
        if (truth_cell && *truth_cell == *task.cell) {
          const double u = detect_stream.uniform_at(static_cast<std::uint64_t>(k) * grid.cell_count() + task.cell->value);
          hit = pd >= 1.0 || u < pd;
        }
        w[task.cell->value] *= 1.0 - pd;
      }
      found = found || hit;
      if (config.record_log) out.log.push_back({rep, k, config.sonars[s].id, task.cell, hit});
      positions[s] = task.position;
    }
    if (found) {
      out.detected_in = k;
      break;
    }
    if (!(std::accumulate(w.begin(), w.end(), 0.0) > 0.0)) break;  // nothing left to search
    field = ProbabilityField{grid, std::move(w)};
  }
  return out;
}

}  // namespace detail

/// Monte Carlo search mission. Each replication places (or moves) a hidden
/// target, runs the schedule with the chosen policy, updates the posterior
/// after every miss and stops at the first detection.
///
/// Replication r draws only from Stream{seed}.derive(r), so results are
/// independent of thread count, and runs that differ only in the sonar list
/// see the same targets and detection rolls.
inline MissionResult simulate_mission(const ProbabilityField& prior, const TruthModel& truth,
                                      const MissionConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("mission: need at least one replication");
  if (config.sonars.empty()) throw std::invalid_argument("mission: need at least one sonar");
  for (const auto& s : config.sonars) {
    s.validate();
    if (!prior.grid().contains(s.start)) throw std::out_of_range("mission: sonar start outside grid");
  }
  if (const auto* m = std::get_if<MovingTruth>(&truth)) m->params.validate();

  std::vector<detail::ReplicationOutcome> outcomes(config.replications);
  parallel_for(config.replications, config.threads,
               [&](std::size_t r) { outcomes[r] = detail::run_replication(prior, truth, config, r); });

  MissionResult result;
  const std::size_t n = config.schedule.n;
  std::vector<std::size_t> first(n, 0);
  for (auto& o : outcomes) {
    result.detection_interval.push_back(o.detected_in);
    if (o.detected_in) ++first[*o.detected_in];
    result.log.insert(result.log.end(), std::make_move_iterator(o.log.begin()), std::make_move_iterator(o.log.end()));
  }
  auto& curve = result.curve;
  const auto m = static_cast<double>(config.replications);
  curve.replications = config.replications;
  curve.t_s.push_back(config.schedule.t0_s);
  curve.cumulative.push_back(0.0);
  std::size_t running = 0;
  for (std::size_t k = 0; k < n; ++k) {
    running += first[k];
    curve.t_s.push_back(config.schedule.interval(k).second);
    curve.cumulative.push_back(static_cast<double>(running) / m);
    curve.per_interval.push_back(static_cast<double>(first[k]) / m);
  }
  return result;
}

struct SweepRow {
  std::size_t sonars = 0;
  double success_prob = 0.0;
};

/// Success probability at the end of the schedule for each fleet size in
/// [k_min, k_max]. `fleet(k)` builds the k-sonar deployment; everything else,
/// including the seed and therefore the targets, is shared across k.
inline std::vector<SweepRow> sonar_count_sweep(std::size_t k_min, std::size_t k_max,
                                               const std::function<std::vector<SonarAsset>(std::size_t)>& fleet,
                                               const ProbabilityField& prior, const TruthModel& truth,
                                               MissionConfig base) {
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("sweep: need 1 <= k_min <= k_max");
  base.record_log = false;
  std::vector<SweepRow> rows;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    base.sonars = fleet(k);
    const auto result = simulate_mission(prior, truth, base);
    rows.push_back({k, result.curve.cumulative.back()});
  }
  return rows;
}

/// `t_s,cum_success_prob`
inline std::string curve_to_csv(const DetectionCurve& curve) {
  std::string out = "t_s,cum_success_prob\n";
  for (std::size_t i = 0; i < curve.t_s.size(); ++i)
    out += csv::format_number(curve.t_s[i]) + ',' + csv::format_number(curve.cumulative[i]) + '\n';
  return out;
}

/// `interval,t_start_s,t_end_s,interval_success_prob`
inline std::string interval_curve_to_csv(const DetectionCurve& curve) {
  std::string out = "interval,t_start_s,t_end_s,interval_success_prob\n";
  for (std::size_t k = 0; k < curve.per_interval.size(); ++k)
    out += std::to_string(k) + ',' + csv::format_number(curve.t_s[k]) + ',' + csv::format_number(curve.t_s[k + 1]) +
           ',' + csv::format_number(curve.per_interval[k]) + '\n';
  return out;
}

/// `replication,interval,sonar,cell,detected`; an idle sonar logs cell -1.
inline std::string mission_log_to_csv(std::span<const MissionLogEntry> log) {
  std::string out = "replication,interval,sonar,cell,detected\n";
  for (const auto& e : log) {
    out += std::to_string(e.replication) + ',' + std::to_string(e.interval) + ',' + std::to_string(e.sonar) + ',' +
           (e.cell ? std::to_string(e.cell->value) : std::string{"-1"}) + ',' + (e.detected ? "1" : "0") + '\n';
  }
  return out;
}

/// `sonars,success_prob`
inline std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::string out = "sonars,success_prob\n";
  for (const auto& r : rows) out += std::to_string(r.sonars) + ',' + csv::format_number(r.success_prob) + '\n';
  return out;
}

}  // namespace subsea
