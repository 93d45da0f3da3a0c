#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace subsea;
using subsea::testing::slurp;
using subsea::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string log;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "subsea");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log;
  std::ostringstream err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), log, err);
  return {code, log.str(), err.str()};
}

}  // namespace

TEST(Scenario, PaperDefaultConstants) {
  const auto c = load_scenario("paper_default");
  EXPECT_EQ(c.particles, 1000u);
  EXPECT_EQ(c.perturb_min_mps, 0.05);
  EXPECT_EQ(c.perturb_max_mps, 0.30);
  EXPECT_EQ(c.t0_min, 20.0);
  EXPECT_EQ(c.ti_min, 30.0);
  EXPECT_EQ(c.intervals, 10u);
  EXPECT_EQ(c.mp, 0.2);
  EXPECT_EQ(c.seabed_km, 4.0);
  EXPECT_EQ(c.sonar_speed_mps, 0.5);
  EXPECT_DOUBLE_EQ(c.cell_size_m(), 300.0);
  ASSERT_GE(c.sonar_offsets_km.size(), 2u);
  EXPECT_EQ(c.sonar_offsets_km[0], 0.2);
  EXPECT_EQ(c.sonar_offsets_km[1], -0.2);
  EXPECT_EQ(c.start_km, (Vec3{4, 3, -1}));
  const auto g = c.grid();
  EXPECT_EQ(g.cols(), 21u);
  EXPECT_EQ(g.rows(), 21u);
  EXPECT_EQ(nearest_cell(g, 4000, 3000).value, 10u * 21u + 10u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Scenario, ShippedFileMatchesBuiltIn) {
  const auto path = std::filesystem::path(SUBSEA_SOURCE_DIR) / "scenarios" / "paper_default.cfg";
  EXPECT_EQ(slurp(path), std::string(kPaperDefaultScenario));
  EXPECT_EQ(load_scenario(path.string()).to_text(), load_scenario("paper_default").to_text());
}

TEST(Scenario, ResolvedTextRoundTrips) {
  auto c = load_scenario("paper_default");
  apply_setting(c, "sonars", "4");
  apply_setting(c, "policy", "sweep");
  apply_setting(c, "terminal_speed_mps", "2.5");
  const auto again = parse_scenario(c.to_text());
  EXPECT_EQ(parse_scenario(again.to_text()).to_text(), again.to_text());
  EXPECT_EQ(again.grid().origin_x(), c.grid().origin_x());
  EXPECT_EQ(again.grid().origin_y(), c.grid().origin_y());
  EXPECT_EQ(again.cell_size_m(), c.cell_size_m());
  EXPECT_EQ(again.sonars, 4u);
  EXPECT_EQ(again.policy, Policy::sweep);
}

TEST(Scenario, Errors) {
  EXPECT_THROW(parse_scenario("bogus = 1\n"), ParseError);
  EXPECT_THROW(parse_scenario("sonars = 2\nsonars = 3\n"), ParseError);
  EXPECT_THROW(parse_scenario("mp = lots\n"), ParseError);
  EXPECT_THROW(parse_scenario("no equals sign\n"), ParseError);
  try {
    parse_scenario("# comment\n\nmp = 0.3\nseed = x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  auto c = load_scenario("paper_default");
  apply_setting(c, "sonars", "9");
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.cfg"), IoError);
}

TEST(Cli, HelpForEverySubcommand) {
  EXPECT_EQ(run({"--help"}).code, 0);
  for (const char* sub : {"simulate", "prior", "plan", "sweep-sonars", "filter", "fit", "econ"}) {
    const auto r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.log.find("--"), std::string::npos) << sub;
  }
  const auto plan = run({"plan", "--help"});
  for (const char* flag : {"--scenario", "--seed", "--out", "--threads", "--set", "--sonars", "--policy", "--truth",
                           "--replications", "--teleport"})
    EXPECT_NE(plan.log.find(flag), std::string::npos) << flag;
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir dir;
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"plan", "--bogus"}).code, 2);
  EXPECT_EQ(run({"plan", "--policy", "zigzag"}).code, 2);
  EXPECT_EQ(run({"plan", "--set", "foo=1", "--out", dir.path().string()}).code, 2);
  EXPECT_EQ(run({"plan", "--sonars", "0", "--out", dir.path().string()}).code, 2);
  EXPECT_EQ(run({"fit"}).code, 2);
  const auto bad = dir.write("bad.csv", "x,y\n1,2\n2,oops\n3,4\n4,5\n5,6\n");
  EXPECT_EQ(run({"fit", "--input", bad.string(), "--out", dir.path().string()}).code, 2);
}

TEST(Cli, IoErrorsExitFour) {
  TempDir dir;
  EXPECT_EQ(run({"fit", "--input", (dir / "missing.csv").string(), "--out", dir.path().string()}).code, 4);
  EXPECT_EQ(run({"econ", "--equipment", (dir / "missing.csv").string(), "--out", dir.path().string()}).code, 4);
  EXPECT_EQ(run({"simulate", "--scenario", (dir / "nope.cfg").string(), "--out", dir.path().string()}).code, 4);
}

TEST(Cli, StrictFitExitsThreeWhenNotConverged) {
  TempDir dir;
  const auto step = dir.write("step.csv", "x,y\n0,0\n1,0\n2,0\n3,0\n4,0\n5,0\n6,0\n7,1\n");
  EXPECT_EQ(run({"fit", "--input", step.string(), "--out", dir.path().string()}).code, 0);
  EXPECT_NE(slurp(dir / "fit_report.txt").find("converged: false"), std::string::npos);
  EXPECT_EQ(run({"fit", "--input", step.string(), "--strict", "--out", dir.path().string()}).code, 3);
}

TEST(Cli, ResolvedScenarioIsEchoed) {
  TempDir dir;
  const auto r = run({"simulate", "--particles", "5", "--seed", "11", "--set", "horizon_s=60", "--out",
                      dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.log.find("# resolved scenario"), std::string::npos);
  EXPECT_NE(r.log.find("horizon_s = 60"), std::string::npos);
  EXPECT_NE(r.log.find("seed = 11"), std::string::npos);
  const auto landing = slurp(dir / "landing.csv");
  EXPECT_EQ(landing.substr(0, landing.find('\n')), "particle,t_s,x_m,y_m,z_m,grounded");
  EXPECT_EQ(std::count(landing.begin(), landing.end(), '\n'), 6);
  const auto traj = slurp(dir / "trajectories.csv");
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "particle,t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,grounded");
}

TEST(Cli, PlanIsByteIdenticalAcrossRunsAndThreads) {
  TempDir a;
  TempDir b;
  const std::vector<std::string> base{"plan", "--sonars", "3", "--seed", "7", "--replications", "40"};
  auto args_a = base;
  args_a.insert(args_a.end(), {"--out", a.path().string(), "--threads", "1"});
  auto args_b = base;
  args_b.insert(args_b.end(), {"--out", b.path().string(), "--threads", "3"});
  ASSERT_EQ(run(args_a).code, 0);
  ASSERT_EQ(run(args_b).code, 0);
  for (const char* f : {"curve.csv", "interval_curve.csv", "mission_log.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  ASSERT_EQ(run(args_a).code, 0);
  EXPECT_EQ(slurp(a / "curve.csv"), slurp(b / "curve.csv"));
}

TEST(Cli, FitOfPlanCurve) {
  TempDir dir;
  ASSERT_EQ(run({"plan", "--replications", "100", "--out", dir.path().string()}).code, 0);
  const auto r = run({"fit", "--input", (dir / "curve.csv").string(), "--strict", "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = slurp(dir / "fit_report.txt");
  EXPECT_NE(report.find("converged: true"), std::string::npos) << report;
  const auto pos = report.find("dx: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_GT(std::stod(report.substr(pos + 4)), 0.0);
}

TEST(Cli, EconRanksTable) {
  TempDir dir;
  const auto table = std::filesystem::path(SUBSEA_SOURCE_DIR) / "data" / "equipment.csv";
  const auto r = run({"econ", "--equipment", table.string(), "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir / "cer_report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "name,role,E,C,CER,rank");
  EXPECT_NE(csv.find("Tritech SEK SK150 Side Scan Sonar,detection,"), std::string::npos);
  EXPECT_NE(r.log.find("detection #1 Tritech SEK SK150 Side Scan Sonar"), std::string::npos) << r.log;
}

TEST(Cli, SweepAndFilterProduceFiles) {
  TempDir dir;
  ASSERT_EQ(run({"sweep-sonars", "--kmax", "2", "--replications", "20", "--out", dir.path().string()}).code, 0);
  const auto sweep = slurp(dir / "sweep.csv");
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 3);
  ASSERT_EQ(run({"filter", "--particles", "200", "--out", dir.path().string()}).code, 0);
  EXPECT_FALSE(slurp(dir / "filter_estimate.csv").empty());
  EXPECT_FALSE(slurp(dir / "filter_log.csv").empty());
  ASSERT_EQ(run({"prior", "--out", dir.path().string(), "--set", "particles=50"}).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "prior_poisson.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "prior_particles.csv"));
}
