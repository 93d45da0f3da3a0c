#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "subsea/econ.hpp"
#include "support.hpp"

using namespace subsea;
using subsea::testing::TempDir;

namespace {

struct Oracle {
  std::vector<std::vector<double>> p;
  std::vector<double> e;
  std::vector<double> w;
};

// Plain-loop evaluation of column normalization, proportions, entropy and
// divergence weights.
Oracle brute_force(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size();
  const std::size_t m = x[0].size();
  Oracle o;
  o.p.assign(n, std::vector<double>(m));
  for (std::size_t j = 0; j < m; ++j) {
    long double sq = 0;
    for (std::size_t i = 0; i < n; ++i) sq += static_cast<long double>(x[i][j]) * x[i][j];
    const long double norm = std::sqrt(sq);
    long double colsum = 0;
    for (std::size_t i = 0; i < n; ++i) colsum += x[i][j] / norm;
    for (std::size_t i = 0; i < n; ++i) o.p[i][j] = static_cast<double>((x[i][j] / norm) / colsum);
    long double h = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (o.p[i][j] > 0) h += static_cast<long double>(o.p[i][j]) * std::log(static_cast<long double>(o.p[i][j]));
    o.e.push_back(static_cast<double>(-h / std::log(static_cast<long double>(n))));
  }
  long double div = 0;
  for (double e : o.e) div += 1.0L - e;
  for (double e : o.e) o.w.push_back(static_cast<double>((1.0L - e) / div));
  return o;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& x) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x[0].size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x[0].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i][j];
  return m;
}

std::vector<EquipmentRecord> table() {
  return load_equipment(std::filesystem::path(SUBSEA_SOURCE_DIR) / "data" / "equipment.csv");
}

std::vector<EquipmentRecord> role_group(EquipmentRole role) {
  std::vector<EquipmentRecord> out;
  for (const auto& r : table())
    if (r.role == role) out.push_back(r);
  return out;
}

std::string winner(const std::vector<RankedEntry>& ranked, EquipmentRole role) {
  for (const auto& r : ranked)
    if (r.entry.role == role && r.rank == 1) return r.entry.name;
  return {};
}

EquipmentRecord record(std::string name, double c1, double c2, double d, double s, double f) {
  return {std::move(name), EquipmentRole::detection, c1, c2, d, s, f, {}};
}

}  // namespace

TEST(Standardize, WorkedValues) {
  Eigen::MatrixXd x(2, 1);
  x << 3, 4;
  const auto z = standardize(x);
  EXPECT_DOUBLE_EQ(z(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(z(1, 0), 0.8);
  Eigen::MatrixXd row(1, 3);
  row << 5, 0.2, 7;
  EXPECT_EQ(standardize(row), Eigen::MatrixXd::Ones(1, 3));
  Eigen::MatrixXd bad(2, 1);
  bad << 0, 0;
  EXPECT_THROW(standardize(bad), std::invalid_argument);
  bad << -1, 1;
  EXPECT_THROW(standardize(bad), std::invalid_argument);
}

TEST(Standardize, UnitColumnNorms) {
  std::mt19937_64 rng{3};
  std::uniform_real_distribution<double> u(0.01, 100.0);
  Eigen::MatrixXd x(6, 5);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = u(rng);
  const auto z = standardize(x);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(z.col(j).norm(), 1.0, 1e-12);
}

TEST(EntropyWeights, TwoByOne) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 3;
  const auto w = entropy_weights(standardize(x));
  EXPECT_NEAR(w.p(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(w.p(1, 0), 0.75, 1e-15);
  EXPECT_NEAR(w.entropy(0), -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)) / std::log(2.0), 1e-15);
  EXPECT_NEAR(w.entropy(0), 0.8112781244591328, 1e-12);
  EXPECT_DOUBLE_EQ(w.weight(0), 1.0);
}

TEST(EntropyWeights, EqualColumnHasNoWeight) {
  Eigen::MatrixXd x(3, 2);
  x << 2, 1, 2, 5, 2, 9;
  const auto w = entropy_weights(standardize(x));
  EXPECT_NEAR(w.entropy(0), 1.0, 1e-15);
  EXPECT_NEAR(w.weight(0), 0.0, 1e-12);
  EXPECT_NEAR(w.weight(1), 1.0, 1e-12);
  EXPECT_FALSE(w.uniform_fallback);
}

TEST(EntropyWeights, UniformFallback) {
  Eigen::MatrixXd x(3, 2);
  x << 2, 4, 2, 4, 2, 4;
  const auto w = entropy_weights(standardize(x));
  EXPECT_TRUE(w.uniform_fallback);
  EXPECT_EQ(w.weight(0), 0.5);
  EXPECT_EQ(w.weight(1), 0.5);
}

TEST(EntropyWeights, MatchesBruteForceOnRandomMatrices) {
  std::mt19937_64 rng{2718};
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<double>> x(5, std::vector<double>(4));
    for (auto& row : x)
      for (auto& v : row) v = u(rng) * (trial % 7 == 0 && rng() % 5 == 0 ? 0.0 : 1.0);
    for (std::size_t j = 0; j < 4; ++j) x[0][j] += 0.1;  // no all-zero column
    const auto oracle = brute_force(x);
    const auto w = entropy_weights(standardize(to_matrix(x)));
    double total = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      EXPECT_NEAR(w.entropy(jj), oracle.e[j], 1e-10);
      EXPECT_NEAR(w.weight(jj), oracle.w[j], 1e-10);
      EXPECT_GE(w.weight(jj), 0.0);
      total += w.weight(jj);
      for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(w.p(static_cast<Eigen::Index>(i), jj), oracle.p[i][j], 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(EntropyWeights, DetectionTableWeights) {
  const auto group = role_group(EquipmentRole::detection);
  const auto x = decision_matrix(group);
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) rows.push_back({x(i, 0), x(i, 1), x(i, 2)});
  const auto oracle = brute_force(rows);
  const auto w = entropy_weights(standardize(x));
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(w.weight(j), oracle.w[static_cast<std::size_t>(j)], 1e-12);
  EXPECT_NEAR(w.weight(0), 0.760403, 1e-6);
  EXPECT_NEAR(w.weight(1), 0.105172, 1e-6);
  EXPECT_NEAR(w.weight(2), 0.134425, 1e-6);
}

TEST(EntropyWeights, ColumnScaleInvariance) {
  std::mt19937_64 rng{6};
  std::uniform_real_distribution<double> u(0.5, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd x(5, 4);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = u(rng);
    Eigen::MatrixXd y = x;
    y.col(trial % 4) *= 1000.0 * u(rng);
    const auto a = entropy_weights(standardize(x));
    const auto b = entropy_weights(standardize(y));
    EXPECT_LE((a.p - b.p).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((a.weight - b.weight).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Cer, IdenticalRecordsTie) {
  const std::vector<EquipmentRecord> g{record("a", 10, 1, 100, 0.5, 0.5), record("b", 10, 1, 100, 0.5, 0.5),
                                       record("c", 20, 1, 300, 0.9, 0.2)};
  const auto rep = evaluate_equipment(g);
  EXPECT_DOUBLE_EQ(rep.entries[0].cer, rep.entries[1].cer);
}

TEST(Cer, DoublingCostLowersCer) {
  std::vector<EquipmentRecord> g{record("a", 10, 1, 100, 0.5, 0.5), record("b", 12, 3, 150, 0.6, 0.7),
                                 record("c", 20, 1, 300, 0.9, 0.2)};
  const double before = evaluate_equipment(g).entries[1].cer;
  g[1].purchase_cost *= 2;
  g[1].maintenance_cost *= 2;
  EXPECT_LT(evaluate_equipment(g).entries[1].cer, before);
}

TEST(Cer, SingleItemGroup) {
  const std::vector<EquipmentRecord> g{record("only", 10, 1, 100, 0.5, 0.5)};
  const auto ranked = rank_equipment(evaluate_equipment(g));
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].rank, 1u);
  EXPECT_EQ(ranked[0].entry.name, "only");
}

TEST(Cer, DetectionTableRanking) {
  const auto ranked = rank_equipment(evaluate_equipment(table()));
  EXPECT_EQ(winner(ranked, EquipmentRole::detection), "Tritech SEK SK150 Side Scan Sonar");
  std::vector<std::string> order;
  for (const auto& r : ranked)
    if (r.entry.role == EquipmentRole::detection) order.push_back(r.entry.name);
  EXPECT_EQ(order[1], "FIFISH PRO V6 PLUS Underwater Exploration Drone");
  for (const auto& r : ranked)
    if (r.entry.name == "Tritech SEK SK150 Side Scan Sonar") EXPECT_NEAR(r.entry.cer, 1.798, 1e-3);
}

TEST(Cer, RescueTableRanking) {
  // Under within-group cost shares the survival boat's share (0.953) swamps
  // its benefit; divers rank first. Pinned so any change is deliberate.
  const auto ranked = rank_equipment(evaluate_equipment(table()));
  EXPECT_EQ(winner(ranked, EquipmentRole::rescue), "Underwater rescue by divers");
  for (const auto& r : ranked)
    if (r.entry.name == "deep-diving survival boat") {
      EXPECT_EQ(r.rank, 3u);
      EXPECT_NEAR(r.entry.cost_share, 519200.0 / (519200.0 + 7600.0 + 18000.0), 1e-12);
    }
}

TEST(Cer, ScaleInvariantRanking) {
  auto scaled = table();
  for (auto& r : scaled) r.detection_range_m *= 3.28084;
  const auto a = rank_equipment(evaluate_equipment(table()));
  const auto b = rank_equipment(evaluate_equipment(scaled));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].entry.name, b[i].entry.name);
    EXPECT_NEAR(a[i].entry.benefit, b[i].entry.benefit, 1e-14);
  }
}

// A record that is worse on every indicator and dearer than every incumbent
// always ranks last. Incumbents can still swap places: the extra row rescales
// each column's proportions differently and shifts the entropy weights, so the
// ranking is not independent of irrelevant alternatives.
TEST(Cer, DominatedRecordRanksLastButIncumbentsCanReverse) {
  std::mt19937_64 rng{99};
  std::uniform_real_distribution<double> u(0.2, 1.0);
  int reversals = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<EquipmentRecord> g;
    for (int i = 0; i < 4; ++i)
      g.push_back(record("r" + std::to_string(i), 1000 * u(rng), 100 * u(rng), 100 + 200 * u(rng), u(rng), u(rng)));
    double worst_d = 1e300, worst_s = 1e300, worst_f = 1e300, dearest = 0;
    for (const auto& r : g) {
      worst_d = std::min(worst_d, r.detection_range_m);
      worst_s = std::min(worst_s, r.stability);
      worst_f = std::min(worst_f, r.feasibility);
      dearest = std::max(dearest, r.total_cost());
    }
    const auto before = rank_equipment(evaluate_equipment(g));
    g.push_back(record("dominated", dearest * (1.0 + u(rng)), 0.0, worst_d * u(rng), worst_s * u(rng), worst_f * u(rng)));
    const auto after = rank_equipment(evaluate_equipment(g));
    EXPECT_EQ(after.back().entry.name, "dominated") << "trial " << trial;
    std::vector<std::string> a;
    std::vector<std::string> b;
    for (const auto& r : before) a.push_back(r.entry.name);
    for (const auto& r : after)
      if (r.entry.name != "dominated") b.push_back(r.entry.name);
    reversals += a != b;
  }
  EXPECT_GT(reversals, 0);
  EXPECT_LT(reversals, 1000);
}

TEST(Cer, RankReversalExample) {
  // Two incumbents trade places once a dominated record joins the group.
  std::vector<EquipmentRecord> g{record("a", 800, 0, 110, 0.3, 0.3), record("b", 900, 0, 190, 0.2, 0.3)};
  const auto before = rank_equipment(evaluate_equipment(g));
  g.push_back(record("c", 1100, 0, 90, 0.1, 0.2));
  const auto after = rank_equipment(evaluate_equipment(g));
  EXPECT_EQ(before[0].entry.name, "b");
  EXPECT_EQ(after[0].entry.name, "a");
  EXPECT_EQ(after[1].entry.name, "b");
  EXPECT_EQ(after[2].entry.name, "c");
}

TEST(LoadEquipment, ParsesTable) {
  const auto t = table();
  ASSERT_EQ(t.size(), 7u);
  EXPECT_EQ(t[0].name, "Tritech SEK SK150 Side Scan Sonar");
  EXPECT_EQ(t[0].total_cost(), 8100.0);
  EXPECT_EQ(t[4].role, EquipmentRole::rescue);
}

TEST(LoadEquipment, Errors) {
  TempDir dir;
  const std::string header = "name,role,purchase_cost,maintenance_cost,detection_range_m,stability,feasibility\n";
  EXPECT_THROW(load_equipment(dir.write("a.csv", "name,role\nx,detection\n")), ParseError);
  EXPECT_THROW(load_equipment(dir.write("b.csv", header + "x,salvage,1,1,1,0.5,0.5\n")), ParseError);
  EXPECT_THROW(load_equipment(dir.write("c.csv", header + "x,detection,1,1,1,1.5,0.5\n")), ParseError);
  EXPECT_THROW(load_equipment(dir.write("d.csv", header + "x,detection,1,one,1,0.5,0.5\n")), ParseError);
  EXPECT_THROW(load_equipment(dir.write("e.csv", header)), ParseError);
  EXPECT_THROW(load_equipment(dir / "missing.csv"), IoError);
  EXPECT_EQ(parse_role(" Rescue "), EquipmentRole::rescue);
}

TEST(CerCsv, Format) {
  const auto ranked = rank_equipment(evaluate_equipment(table()));
  const auto text = cer_report_to_csv(ranked);
  EXPECT_EQ(text.substr(0, text.find('\n')), "name,role,E,C,CER,rank");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
}
