#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subsea/subsea.hpp"

namespace subsea::cli {

enum ExitCode : int { ok = 0, config_error = 2, numeric_error = 3, io_error = 4 };

/// Default output directory: $SUBSEA_OUT_DIR, else ./out.
inline std::string default_out_dir() {
  if (const char* env = std::getenv("SUBSEA_OUT_DIR"); env && *env) return env;
  return "out";
}

struct CommonOptions {
  std::string scenario = "paper_default";
  std::optional<std::uint64_t> seed;
  std::string out = default_out_dir();
  unsigned threads = 0;
  std::vector<std::string> overrides;
};

inline void add_common(CLI::App& cmd, CommonOptions& c) {
  cmd.add_option("--scenario", c.scenario, "Built-in scenario name or path to a key = value file")
      ->capture_default_str();
  cmd.add_option("--seed", c.seed, "Master seed; overrides the scenario's seed");
  cmd.add_option("--out", c.out, "Output directory (default from SUBSEA_OUT_DIR, else ./out)")
      ->capture_default_str();
  cmd.add_option("--threads", c.threads, "Worker threads; 0 uses the hardware count. Results do not depend on it")
      ->capture_default_str();
  cmd.add_option("--set", c.overrides, "Override one scenario key, as key=value (repeatable)");
}

/// Scenario with --set overrides and --seed applied, validated, and echoed.
inline ScenarioConfig resolve(const CommonOptions& c, std::ostream& log) {
  auto cfg = load_scenario(c.scenario);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, std::string(csv::trim(std::string_view(kv).substr(0, eq))),
                  std::string(csv::trim(std::string_view(kv).substr(eq + 1))));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  log << "# resolved scenario\n" << cfg.to_text() << "# seed " << cfg.seed << "\n";
  return cfg;
}

inline void emit(const std::filesystem::path& dir, const std::string& name, const std::string& contents,
                 std::ostream& log) {
  const auto path = dir / name;
  csv::write_atomic(path, contents);
  log << "wrote " << path.string() << '\n';
}

/// `particle,x_m,y_m,z_m` from a landing CSV written by `simulate`.
inline std::vector<Vec3> read_landing(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < table.header.size(); ++i)
      if (table.header[i] == name) return i;
    throw ParseError(path.string() + ": missing column '" + name + "'");
  };
  const auto cx = col("x_m");
  const auto cy = col("y_m");
  const auto cz = col("z_m");
  std::vector<Vec3> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto where = path.string() + " line " + std::to_string(table.line_numbers[r]);
    if (f.size() != table.header.size()) throw ParseError(where + ": wrong field count");
    out.push_back({csv::parse_double(f[cx], where), csv::parse_double(f[cy], where), csv::parse_double(f[cz], where)});
  }
  if (out.empty()) throw ParseError(path.string() + ": no landing positions");
  return out;
}

inline std::string trajectories_to_csv(const Ensemble& e) {
  std::string out = "particle,t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,grounded\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto id = std::to_string(i);
    for (const auto& s : e.trajectories[i]) {
      out += id + ',' + csv::format_number(s.t_s) + ',' + csv::format_number(s.position.x) + ',' +
             csv::format_number(s.position.y) + ',' + csv::format_number(s.position.z) + ',' +
             csv::format_number(s.velocity.x) + ',' + csv::format_number(s.velocity.y) + ',' +
             csv::format_number(s.velocity.z) + ',' + (s.grounded ? "1" : "0") + '\n';
    }
  }
  return out;
}

inline std::string landing_to_csv(const Ensemble& e) {
  std::string out = "particle,t_s,x_m,y_m,z_m,grounded\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& s = e.final_state(i);
    out += std::to_string(i) + ',' + csv::format_number(s.t_s) + ',' + csv::format_number(s.position.x) + ',' +
           csv::format_number(s.position.y) + ',' + csv::format_number(s.position.z) + ',' +
           (s.grounded ? "1" : "0") + '\n';
  }
  return out;
}

/// Prior for planning: a field CSV if given, else the scenario's choice.
inline ProbabilityField planning_prior(const ScenarioConfig& cfg, const std::string& field_csv,
                                       const std::vector<Vec3>& landing, unsigned threads) {
  const auto grid = cfg.grid();
  if (!field_csv.empty()) return field_from_csv(grid, field_csv);
  if (cfg.prior == "particles") {
    if (!landing.empty()) return field_from_positions(grid, landing);
    return field_from_particles(grid, run_ensemble(cfg.scenario_params(), cfg.particles, cfg.seed, threads));
  }
  return cfg.poisson_prior();
}

inline TruthModel truth_model(const ScenarioConfig& cfg, std::vector<Vec3> landing, unsigned threads) {
  if (cfg.truth == "fixed") return FixedTruth{CellId{*cfg.truth_cell}};
  if (cfg.truth == "landing") {
    if (landing.empty()) landing = run_ensemble(cfg.scenario_params(), cfg.particles, cfg.seed, threads).final_positions();
    return LandingTruth{std::move(landing)};
  }
  return MovingTruth{cfg.scenario_params()};
}

inline MissionConfig mission_config(const ScenarioConfig& cfg, unsigned threads) {
  MissionConfig m;
  m.sonars = cfg.fleet(cfg.sonars);
  m.schedule = cfg.schedule();
  m.policy = cfg.policy;
  m.selection.teleport = cfg.teleport;
  m.replications = cfg.replications;
  m.seed = cfg.seed;
  m.threads = threads;
  return m;
}

/// Runs the command line. Output files go to --out; progress and the
/// resolved configuration go to `log`, errors to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"subsea: disabled-submersible drift prediction, search planning and equipment selection"};
  app.require_subcommand(1);
  app.allow_extras(false);

  CommonOptions common;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo drift/sink ensemble -> trajectories.csv, landing.csv");
  add_common(*simulate, common);
  std::optional<std::size_t> particles;
  simulate->add_option("--particles", particles, "Ensemble size; overrides the scenario");

  auto* prior = app.add_subcommand("prior", "Probability fields -> prior_poisson.csv and/or prior_particles.csv");
  add_common(*prior, common);
  std::string prior_kind = "both";
  std::string prior_landing;
  prior->add_option("--kind", prior_kind, "poisson, particles or both")
      ->check(CLI::IsMember({"poisson", "particles", "both"}))
      ->capture_default_str();
  prior->add_option("--landing", prior_landing, "landing.csv from simulate; otherwise the ensemble is rerun");

  std::optional<std::size_t> sonars;
  std::optional<std::string> policy;
  std::optional<std::string> truth;
  std::optional<std::size_t> replications;
  bool teleport = false;
  std::string prior_field;
  std::string plan_landing;
  auto* plan = app.add_subcommand("plan", "Monte Carlo search mission -> curve.csv, interval_curve.csv, mission_log.csv");
  add_common(*plan, common);
  plan->add_option("--sonars", sonars, "Number of sonars");
  plan->add_option("--policy", policy, "greedy or sweep")->check(CLI::IsMember({"greedy", "sweep"}));
  plan->add_option("--truth", truth, "moving, landing or fixed")->check(CLI::IsMember({"moving", "landing", "fixed"}));
  plan->add_option("--replications", replications, "Monte Carlo replications M");
  plan->add_flag("--teleport", teleport, "Drop the per-interval travel radius");
  plan->add_option("--prior-field", prior_field, "Field CSV from prior to plan against");
  plan->add_option("--landing", plan_landing, "landing.csv used for particle priors and landing truth");

  std::size_t k_min = 1;
  std::size_t k_max = 5;
  auto* sweep = app.add_subcommand("sweep-sonars", "Success probability per fleet size -> sweep.csv");
  add_common(*sweep, common);
  sweep->add_option("--kmin", k_min, "Smallest fleet")->capture_default_str();
  sweep->add_option("--kmax", k_max, "Largest fleet")->capture_default_str();
  sweep->add_option("--policy", policy, "greedy or sweep")->check(CLI::IsMember({"greedy", "sweep"}));
  sweep->add_option("--truth", truth, "moving, landing or fixed")->check(CLI::IsMember({"moving", "landing", "fixed"}));
  sweep->add_option("--replications", replications, "Monte Carlo replications M");
  sweep->add_flag("--teleport", teleport, "Drop the per-interval travel radius");

  auto* filter = app.add_subcommand("filter", "Particle-filter search on a moving target -> filter_estimate.csv, filter_log.csv");
  add_common(*filter, common);
  filter->add_option("--sonars", sonars, "Number of sonars");
  filter->add_option("--policy", policy, "greedy or sweep")->check(CLI::IsMember({"greedy", "sweep"}));
  std::optional<std::size_t> filter_particles;
  filter->add_option("--particles", filter_particles, "Filter particle count P");

  std::string fit_input;
  std::optional<std::size_t> budget;
  bool strict = false;
  auto* fit = app.add_subcommand("fit", "Boltzmann fit of a two-column CSV -> fit_report.txt");
  fit->add_option("--input", fit_input, "CSV with a header and two numeric columns (x, y)")->required();
  fit->add_option("--budget", budget, "Thin to this many points (>= 4) before fitting");
  fit->add_flag("--strict", strict, "Exit 3 when the fit does not converge");
  fit->add_option("--out", common.out, "Output directory")->capture_default_str();

  std::string equipment;
  auto* econ = app.add_subcommand("econ", "Entropy-weight CER ranking -> cer_report.csv");
  econ->add_option("--equipment", equipment, "Equipment CSV")->required();
  econ->add_option("--out", common.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream help;
      app.exit(e, help, help);
      log << help.str();
      return ok;
    }
    err << "error: " << e.what() << '\n';
    return config_error;
  }

  const std::filesystem::path out{common.out};
  try {
    if (*simulate) {
      auto cfg = resolve(common, log);
      if (particles) {
        cfg.particles = *particles;
        cfg.validate();
      }
      const auto e = run_ensemble(cfg.scenario_params(), cfg.particles, cfg.seed, common.threads);
      const auto s = ensemble_summary(e, cfg.grid());
      log << "mean landing (m): " << s.mean_final << '\n'
          << "modal landing (m): " << s.modal_final << " cell " << s.modal_cell.value << '\n'
          << "max horizontal offset (m): " << csv::format_number(s.max_horizontal_offset_m) << '\n';
      emit(out, "trajectories.csv", trajectories_to_csv(e), log);
      emit(out, "landing.csv", landing_to_csv(e), log);
    } else if (*prior) {
      const auto cfg = resolve(common, log);
      if (prior_kind != "particles") emit(out, "prior_poisson.csv", field_to_csv(cfg.poisson_prior()), log);
      if (prior_kind != "poisson") {
        const auto grid = cfg.grid();
        const auto field = prior_landing.empty()
                               ? field_from_particles(grid, run_ensemble(cfg.scenario_params(), cfg.particles, cfg.seed,
                                                                         common.threads))
                               : field_from_positions(grid, read_landing(prior_landing));
        emit(out, "prior_particles.csv", field_to_csv(field), log);
      }
    } else if (*plan || *sweep) {
      auto& oc = common;
      if (sonars) oc.overrides.push_back("sonars=" + std::to_string(*sonars));
      if (policy) oc.overrides.push_back("policy=" + *policy);
      if (truth) oc.overrides.push_back("truth=" + *truth);
      if (replications) oc.overrides.push_back("replications=" + std::to_string(*replications));
      if (teleport) oc.overrides.push_back("teleport=true");
      const auto cfg = resolve(oc, log);
      const auto landing = plan_landing.empty() ? std::vector<Vec3>{} : read_landing(plan_landing);
      const auto field = planning_prior(cfg, prior_field, landing, common.threads);
      const auto model = truth_model(cfg, landing, common.threads);
      auto mission = mission_config(cfg, common.threads);
      if (*plan) {
        const auto result = simulate_mission(field, model, mission);
        log << "success probability: " << csv::format_number(result.curve.cumulative.back()) << '\n';
        emit(out, "curve.csv", curve_to_csv(result.curve), log);
        emit(out, "interval_curve.csv", interval_curve_to_csv(result.curve), log);
        emit(out, "mission_log.csv", mission_log_to_csv(result.log), log);
      } else {
        const auto rows = sonar_count_sweep(k_min, k_max, [&](std::size_t k) { return cfg.fleet(k); }, field, model,
                                            mission);
        for (const auto& r : rows) log << r.sonars << " sonars: " << csv::format_number(r.success_prob) << '\n';
        emit(out, "sweep.csv", sweep_to_csv(rows), log);
      }
    } else if (*filter) {
      auto& oc = common;
      if (sonars) oc.overrides.push_back("sonars=" + std::to_string(*sonars));
      if (policy) oc.overrides.push_back("policy=" + *policy);
      if (filter_particles) oc.overrides.push_back("filter_particles=" + std::to_string(*filter_particles));
      const auto cfg = resolve(oc, log);
      const auto params = cfg.scenario_params();
      const std::vector<VehicleState> cloud(cfg.filter_particles, params.initial);
      FilterMissionConfig fc;
      fc.sonars = cfg.fleet(cfg.sonars);
      fc.schedule = cfg.schedule();
      fc.policy = cfg.policy;
      fc.selection.teleport = cfg.teleport;
      fc.ess_threshold = cfg.ess_threshold;
      fc.seed = cfg.seed;
      fc.threads = common.threads;
      const auto result = run_filter_mission(make_filter_state(cloud, 0.0), params, params, cfg.grid(), fc);
      if (result.detected_in)
        log << "target detected in interval " << *result.detected_in << '\n';
      else
        log << "target not detected\n";
      emit(out, "filter_estimate.csv", filter_estimates_to_csv(result.estimates), log);
      emit(out, "filter_log.csv", mission_log_to_csv(result.log), log);
    } else if (*fit) {
      const auto table = csv::read_table(fit_input);
      if (table.header.size() != 2) throw ParseError(fit_input + ": expected exactly two columns");
      std::vector<double> xs;
      std::vector<double> ys;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto where = fit_input + " line " + std::to_string(table.line_numbers[r]);
        if (table.rows[r].size() != 2) throw ParseError(where + ": expected two fields");
        xs.push_back(csv::parse_double(table.rows[r][0], where));
        ys.push_back(csv::parse_double(table.rows[r][1], where));
      }
      if (budget) {
        const auto keep = thin_points(xs, ys, *budget);
        std::vector<double> tx;
        std::vector<double> ty;
        for (auto i : keep) {
          tx.push_back(xs[i]);
          ty.push_back(ys[i]);
        }
        xs = std::move(tx);
        ys = std::move(ty);
      }
      const auto report = fit_boltzmann(xs, ys);
      const auto text = fit_report_text(report);
      log << "fit of " << fit_input << " (" << xs.size() << " points)\n" << text;
      emit(out, "fit_report.txt", text, log);
      if (strict && !report.converged) {
        err << "error: fit did not converge\n";
        return numeric_error;
      }
    } else if (*econ) {
      const auto records = load_equipment(equipment);
      const auto report = evaluate_equipment(records);
      for (const auto& [role, w] : report.weights) {
        log << to_string(role) << " weights:";
        for (Eigen::Index j = 0; j < w.weight.size(); ++j) log << ' ' << csv::format_number(w.weight(j));
        log << (w.uniform_fallback ? "  (every indicator constant: equal weights)" : "") << '\n';
      }
      const auto ranked = rank_equipment(report);
      for (const auto& r : ranked)
        log << to_string(r.entry.role) << " #" << r.rank << ' ' << r.entry.name << " CER "
            << csv::format_number(r.entry.cer) << '\n';
      emit(out, "cer_report.csv", cer_report_to_csv(ranked), log);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return io_error;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return numeric_error;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return numeric_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return io_error;
  }
  return ok;
}

}  // namespace subsea::cli
