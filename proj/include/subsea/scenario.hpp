#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "subsea/csv.hpp"
#include "subsea/environment.hpp"
#include "subsea/error.hpp"
#include "subsea/grid.hpp"
#include "subsea/kinematics.hpp"
#include "subsea/planner.hpp"
#include "subsea/probgrid.hpp"

namespace subsea {

/// Built-in scenario reproducing the drift case: 1000 particles, disturbance
/// speeds 0.05-0.30 m/s, t_0 = 20 min, t_i = 30 min, n = 10, m_p = 0.2,
/// 300 m cells, 4 km seabed, two sonars 0.2 km either side of the
/// last-known position.
inline constexpr std::string_view kPaperDefaultScenario = R"(# paper_default: neutral-buoyancy drift from the last-known position.
name = paper_default

# vehicle
regime = drift
start_km = 4,3,-1
velocity_mps = 0,0,0
sink_accel_mps2 = 0
terminal_speed_mps = none
seabed_km = 4
dt_s = 1
# drift horizon for the landing distribution: the preparation time t_0
horizon_s = 1200
record_every_s = 60

# water
current_csv =
current_mps = 0,0,0
perturb_min_mps = 0.05
perturb_max_mps = 0.30
persistence_s = 600
particles = 1000

# grid: 120 m swath, 25 % overlap, 3 legs -> 300 m cells
swath_m = 120
overlap = 0.25
turns = 3
gs_m = auto
x_max_m = 6300
y_max_m = 6300
grid_origin_km = auto

# schedule and prior
t0_min = 20
ti_min = 30
intervals = 10
mp = 0.2
prior = poisson
prior_t_min = auto
prior_radius_cells = 10

# search assets
sonars = 2
sonar_offsets_km = 0.2,-0.2,0.4,-0.4,0.6,-0.6
sonar_speed_mps = 0.5
sonar_pd = 1
policy = greedy
teleport = false
truth = moving
truth_cell = none
replications = 500

# particle filter
filter_particles = 1000
ess_threshold = 0.5

seed = 7
)";

/// Every tunable of a run, parsed from `key = value` text. Keys carry their
/// units; unknown or repeated keys are rejected.
struct ScenarioConfig {
  std::string name = "custom";

  Regime regime = Regime::drift;
  Vec3 start_km{4.0, 3.0, -1.0};
  Vec3 velocity_mps{};
  double sink_accel_mps2 = 0.0;
  std::optional<double> terminal_speed_mps;
  double seabed_km = 4.0;
  double dt_s = 1.0;
  double horizon_s = 1200.0;
  double record_every_s = 60.0;

  std::string current_csv;
  Vec3 current_mps{};
  double perturb_min_mps = 0.05;
  double perturb_max_mps = 0.30;
  double persistence_s = 600.0;
  std::size_t particles = 1000;

  double swath_m = 120.0;
  double overlap = 0.25;
  int turns = 3;
  std::optional<double> gs_m;  ///< empty: derive from swath geometry
  double x_max_m = 6300.0;
  double y_max_m = 6300.0;
  std::optional<std::pair<double, double>> grid_origin_km;  ///< empty: centre on start

  double t0_min = 20.0;
  double ti_min = 30.0;
  std::size_t intervals = 10;
  double mp = 0.2;
  std::string prior = "poisson";
  std::optional<double> prior_t_min;
  std::size_t prior_radius_cells = 10;

  std::size_t sonars = 2;
  std::vector<double> sonar_offsets_km{0.2, -0.2, 0.4, -0.4, 0.6, -0.6};
  double sonar_speed_mps = 0.5;
  double sonar_pd = 1.0;
  Policy policy = Policy::greedy;
  bool teleport = false;
  std::string truth = "moving";
  std::optional<std::size_t> truth_cell;
  std::size_t replications = 500;

  std::size_t filter_particles = 1000;
  double ess_threshold = 0.5;

  std::uint64_t seed = 7;

  /// Cell edge actually used.
  [[nodiscard]] double cell_size_m() const { return gs_m ? *gs_m : grid_size_from_sweep(swath_m, overlap, turns); }

  [[nodiscard]] GridSpec grid() const {
    const double g = cell_size_m();
    double ox = 0.0;
    double oy = 0.0;
    if (grid_origin_km) {
      ox = grid_origin_km->first * 1000.0;
      oy = grid_origin_km->second * 1000.0;
    } else {
      // Last-known position at the centre of the middle cell.
      const GridSpec probe{g, x_max_m, y_max_m};
      ox = start_km.x * 1000.0 - (static_cast<double>(probe.cols() / 2) + 0.5) * g;
      oy = start_km.y * 1000.0 - (static_cast<double>(probe.rows() / 2) + 0.5) * g;
    }
    return GridSpec{g, x_max_m, y_max_m, ox, oy};
  }

  [[nodiscard]] ScenarioParams scenario_params() const {
    ScenarioParams p;
    p.regime = regime;
    p.initial.position = start_km * 1000.0;
    p.initial.velocity = velocity_mps;
    p.sink_accel_mps2 = sink_accel_mps2;
    p.terminal_speed_mps = terminal_speed_mps;
    p.seabed_depth_m = seabed_km * 1000.0;
    p.dt_s = dt_s;
    p.horizon_s = horizon_s;
    p.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(record_every_s / dt_s)));
    p.perturbation = {perturb_min_mps, perturb_max_mps, persistence_s, seed};
    if (!current_csv.empty()) {
      p.current = std::make_shared<const CurrentField>(load_current_field(current_csv));
    } else if (!(current_mps == Vec3{})) {
      p.current = std::make_shared<const CurrentField>(CurrentField::uniform(current_mps));
    }
    return p;
  }

  [[nodiscard]] SearchSchedule schedule() const { return build_schedule(t0_min * 60.0, ti_min * 60.0, intervals); }

  /// Predicted centre for the prior: last-known position carried along the
  /// initial horizontal velocity until the search starts.
  [[nodiscard]] CellId prior_center() const {
    const auto g = grid();
    const double t = t0_min * 60.0;
    return nearest_cell(g, start_km.x * 1000.0 + velocity_mps.x * t, start_km.y * 1000.0 + velocity_mps.y * t);
  }

  [[nodiscard]] ProbabilityField poisson_prior() const {
    const double t = prior_t_min ? *prior_t_min : t0_min;
    return build_poisson_prior(grid(), PoissonPriorParams::at_time(mp, t, t0_min, prior_center(), prior_radius_cells));
  }

  /// k sonars: sonar i starts `sonar_offsets_km[i]` east of the last-known position.
  [[nodiscard]] std::vector<SonarAsset> fleet(std::size_t k) const {
    if (k > sonar_offsets_km.size())
      throw std::invalid_argument("scenario: " + std::to_string(k) + " sonars need as many sonar_offsets_km entries");
    const auto g = grid();
    std::vector<SonarAsset> out;
    for (std::size_t i = 0; i < k; ++i) {
      SonarAsset s;
      s.id = static_cast<int>(i);
      s.speed_mps = sonar_speed_mps;
      s.swath_m = swath_m;
      s.overlap = overlap;
      s.cell_time_s = ti_min * 60.0;
      s.detection_prob = sonar_pd;
      s.start = nearest_cell(g, start_km.x * 1000.0 + sonar_offsets_km[i] * 1000.0, start_km.y * 1000.0);
      out.push_back(s);
    }
    return out;
  }

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const {
    scenario_params_checked();
    (void)grid();
    (void)schedule();
    if (!(mp > 0.0)) throw std::invalid_argument("scenario: mp must be positive");
    if (prior_t_min && !(*prior_t_min >= t0_min)) throw std::invalid_argument("scenario: prior_t_min must be >= t0_min");
    if (prior != "poisson" && prior != "particles") throw std::invalid_argument("scenario: prior must be poisson or particles");
    if (truth != "moving" && truth != "landing" && truth != "fixed")
      throw std::invalid_argument("scenario: truth must be moving, landing or fixed");
    if (truth == "fixed" && !truth_cell) throw std::invalid_argument("scenario: truth = fixed needs truth_cell");
    if (truth_cell && *truth_cell >= grid().cell_count()) throw std::invalid_argument("scenario: truth_cell outside grid");
    if (particles < 1) throw std::invalid_argument("scenario: particles must be >= 1");
    if (sonars < 1) throw std::invalid_argument("scenario: sonars must be >= 1");
    if (replications < 1) throw std::invalid_argument("scenario: replications must be >= 1");
    if (filter_particles < 2) throw std::invalid_argument("scenario: filter_particles must be >= 2");
    if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0)) throw std::invalid_argument("scenario: ess_threshold must be in [0, 1]");
    if (!(record_every_s > 0.0)) throw std::invalid_argument("scenario: record_every_s must be positive");
    (void)fleet(sonars).front().validate();
  }

  /// Resolved configuration in the same key = value syntax.
  [[nodiscard]] std::string to_text() const;

 private:
  void scenario_params_checked() const {
    ScenarioParams p;
    p.regime = regime;
    p.initial.position = start_km * 1000.0;
    p.initial.velocity = velocity_mps;
    p.sink_accel_mps2 = sink_accel_mps2;
    p.terminal_speed_mps = terminal_speed_mps;
    p.seabed_depth_m = seabed_km * 1000.0;
    p.dt_s = dt_s;
    p.horizon_s = horizon_s;
    p.perturbation = {perturb_min_mps, perturb_max_mps, persistence_s, seed};
    p.validate();
  }
};

namespace detail {

inline std::string format_list(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ',';
    out += csv::format_number(v);
  }
  return out;
}

inline std::vector<double> parse_list(std::string_view text, const std::string& key) {
  std::vector<double> out;
  for (const auto& part : csv::split(text)) out.push_back(csv::parse_double(part, key));
  return out;
}

inline Vec3 parse_vec3(std::string_view text, const std::string& key) {
  const auto v = parse_list(text, key);
  if (v.size() != 3) throw ParseError(key + ": expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

inline bool parse_bool(std::string_view text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError(key + ": expected true or false");
}

inline std::size_t parse_count(std::string_view text, const std::string& key) {
  const auto v = csv::parse_integer(text, key);
  if (v < 0) throw ParseError(key + ": must be >= 0");
  return static_cast<std::size_t>(v);
}

inline bool is_auto(std::string_view text) { return text == "auto" || text == "none" || text.empty(); }

}  // namespace detail

/// Applies one `key = value` assignment.
inline void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const auto num = [&] { return csv::parse_double(value, key); };
  if (key == "name") c.name = value;
  else if (key == "regime") {
    if (value == "drift") c.regime = Regime::drift;
    else if (value == "sink") c.regime = Regime::sink;
    else throw ParseError("regime: expected drift or sink");
  }
  else if (key == "start_km") c.start_km = parse_vec3(value, key);
  else if (key == "velocity_mps") c.velocity_mps = parse_vec3(value, key);
  else if (key == "sink_accel_mps2") c.sink_accel_mps2 = num();
  else if (key == "terminal_speed_mps") c.terminal_speed_mps = is_auto(value) ? std::nullopt : std::optional{num()};
  else if (key == "seabed_km") c.seabed_km = num();
  else if (key == "dt_s") c.dt_s = num();
  else if (key == "horizon_s") c.horizon_s = num();
  else if (key == "record_every_s") c.record_every_s = num();
  else if (key == "current_csv") c.current_csv = value;
  else if (key == "current_mps") c.current_mps = parse_vec3(value, key);
  else if (key == "perturb_min_mps") c.perturb_min_mps = num();
  else if (key == "perturb_max_mps") c.perturb_max_mps = num();
  else if (key == "persistence_s") c.persistence_s = num();
  else if (key == "particles") c.particles = parse_count(value, key);
  else if (key == "swath_m") c.swath_m = num();
  else if (key == "overlap") c.overlap = num();
  else if (key == "turns") c.turns = static_cast<int>(csv::parse_integer(value, key));
  else if (key == "gs_m") c.gs_m = is_auto(value) ? std::nullopt : std::optional{num()};
  else if (key == "x_max_m") c.x_max_m = num();
  else if (key == "y_max_m") c.y_max_m = num();
  else if (key == "grid_origin_km") {
    if (is_auto(value)) {
      c.grid_origin_km.reset();
    } else {
      const auto v = parse_list(value, key);
      if (v.size() != 2) throw ParseError(key + ": expected two comma-separated numbers");
      c.grid_origin_km = std::pair{v[0], v[1]};
    }
  }
  else if (key == "t0_min") c.t0_min = num();
  else if (key == "ti_min") c.ti_min = num();
  else if (key == "intervals") c.intervals = parse_count(value, key);
  else if (key == "mp") c.mp = num();
  else if (key == "prior") c.prior = value;
  else if (key == "prior_t_min") c.prior_t_min = is_auto(value) ? std::nullopt : std::optional{num()};
  else if (key == "prior_radius_cells") c.prior_radius_cells = parse_count(value, key);
  else if (key == "sonars") c.sonars = parse_count(value, key);
  else if (key == "sonar_offsets_km") c.sonar_offsets_km = parse_list(value, key);
  else if (key == "sonar_speed_mps") c.sonar_speed_mps = num();
  else if (key == "sonar_pd") c.sonar_pd = num();
  else if (key == "policy") {
    if (value == "greedy") c.policy = Policy::greedy;
    else if (value == "sweep") c.policy = Policy::sweep;
    else throw ParseError("policy: expected greedy or sweep");
  }
  else if (key == "teleport") c.teleport = parse_bool(value, key);
  else if (key == "truth") c.truth = value;
  else if (key == "truth_cell") c.truth_cell = is_auto(value) ? std::nullopt : std::optional{parse_count(value, key)};
  else if (key == "replications") c.replications = parse_count(value, key);
  else if (key == "filter_particles") c.filter_particles = parse_count(value, key);
  else if (key == "ess_threshold") c.ess_threshold = num();
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_count(value, key));
  else throw ParseError("unknown scenario key '" + key + "'");
}

/// Parses scenario text. Lines are `key = value`; `#` starts a comment.
inline ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig c;
  std::map<std::string, std::size_t> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("scenario line " + std::to_string(line_no) + ": expected key = value");
    const std::string key{csv::trim(body.substr(0, eq))};
    const std::string value{csv::trim(body.substr(eq + 1))};
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      throw ParseError("scenario line " + std::to_string(line_no) + ": '" + key + "' already set on line " +
                       std::to_string(it->second));
    try {
      apply_setting(c, key, value);
    } catch (const ParseError& e) {
      throw ParseError("scenario line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

/// A scenario by built-in name or file path.
inline ScenarioConfig load_scenario(const std::string& name_or_path) {
  if (name_or_path == "paper_default") return parse_scenario(kPaperDefaultScenario);
  std::ifstream in{name_or_path};
  if (!in) throw IoError("scenario '" + name_or_path + "' is neither a built-in name nor a readable file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

inline std::string ScenarioConfig::to_text() const {
  using detail::format_list;
  const auto opt = [](const auto& v) { return v ? csv::format_number(static_cast<double>(*v)) : std::string{"auto"}; };
  std::ostringstream os;
  os << "name = " << name << '\n'
     << "regime = " << (regime == Regime::drift ? "drift" : "sink") << '\n'
     << "start_km = " << format_list({start_km.x, start_km.y, start_km.z}) << '\n'
     << "velocity_mps = " << format_list({velocity_mps.x, velocity_mps.y, velocity_mps.z}) << '\n'
     << "sink_accel_mps2 = " << csv::format_number(sink_accel_mps2) << '\n'
     << "terminal_speed_mps = " << (terminal_speed_mps ? csv::format_number(*terminal_speed_mps) : "none") << '\n'
     << "seabed_km = " << csv::format_number(seabed_km) << '\n'
     << "dt_s = " << csv::format_number(dt_s) << '\n'
     << "horizon_s = " << csv::format_number(horizon_s) << '\n'
     << "record_every_s = " << csv::format_number(record_every_s) << '\n'
     << "current_csv = " << current_csv << '\n'
     << "current_mps = " << format_list({current_mps.x, current_mps.y, current_mps.z}) << '\n'
     << "perturb_min_mps = " << csv::format_number(perturb_min_mps) << '\n'
     << "perturb_max_mps = " << csv::format_number(perturb_max_mps) << '\n'
     << "persistence_s = " << csv::format_number(persistence_s) << '\n'
     << "particles = " << particles << '\n'
     << "swath_m = " << csv::format_number(swath_m) << '\n'
     << "overlap = " << csv::format_number(overlap) << '\n'
     << "turns = " << turns << '\n'
     << "gs_m = " << csv::format_number(cell_size_m()) << (gs_m ? "" : "  # derived from swath geometry") << '\n'
     << "x_max_m = " << csv::format_number(x_max_m) << '\n'
     << "y_max_m = " << csv::format_number(y_max_m) << '\n';
  const auto g = grid();
  os << "grid_origin_km = " << format_list({g.origin_x() / 1000.0, g.origin_y() / 1000.0}) << '\n'
     << "t0_min = " << csv::format_number(t0_min) << '\n'
     << "ti_min = " << csv::format_number(ti_min) << '\n'
     << "intervals = " << intervals << '\n'
     << "mp = " << csv::format_number(mp) << '\n'
     << "prior = " << prior << '\n'
     << "prior_t_min = " << opt(prior_t_min) << '\n'
     << "prior_radius_cells = " << prior_radius_cells << '\n'
     << "sonars = " << sonars << '\n'
     << "sonar_offsets_km = ";
  for (std::size_t i = 0; i < sonar_offsets_km.size(); ++i)
    os << (i ? "," : "") << csv::format_number(sonar_offsets_km[i]);
  os << '\n'
     << "sonar_speed_mps = " << csv::format_number(sonar_speed_mps) << '\n'
     << "sonar_pd = " << csv::format_number(sonar_pd) << '\n'
     << "policy = " << (policy == Policy::greedy ? "greedy" : "sweep") << '\n'
     << "teleport = " << (teleport ? "true" : "false") << '\n'
     << "truth = " << truth << '\n'
     << "truth_cell = " << (truth_cell ? std::to_string(*truth_cell) : std::string{"none"}) << '\n'
     << "replications = " << replications << '\n'
     << "filter_particles = " << filter_particles << '\n'
     << "ess_threshold = " << csv::format_number(ess_threshold) << '\n'
     << "seed = " << seed << '\n';
  return os.str();
}

}  // namespace subsea
