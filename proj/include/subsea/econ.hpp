#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subsea/csv.hpp"
#include "subsea/error.hpp"

namespace subsea {

enum class EquipmentRole { detection, rescue };

inline std::string to_string(EquipmentRole r) { return r == EquipmentRole::detection ? "detection" : "rescue"; }

struct EquipmentRecord {
  std::string name;
  EquipmentRole role = EquipmentRole::detection;
  double purchase_cost = 0.0;     ///< C1
  double maintenance_cost = 0.0;  ///< C2
  double detection_range_m = 0.0; ///< D
  double stability = 0.0;         ///< S in [0, 1]
  double feasibility = 0.0;       ///< F in [0, 1]
  std::vector<double> extra_indicators;  ///< further benefit-type columns, if any

  void validate() const {
    if (!(purchase_cost >= 0.0) || !(maintenance_cost >= 0.0))
      throw std::invalid_argument("equipment '" + name + "': costs must be >= 0");
    if (!(detection_range_m > 0.0)) throw std::invalid_argument("equipment '" + name + "': range must be > 0");
    if (!(stability >= 0.0 && stability <= 1.0) || !(feasibility >= 0.0 && feasibility <= 1.0))
      throw std::invalid_argument("equipment '" + name + "': stability and feasibility must be in [0, 1]");
  }

  [[nodiscard]] double total_cost() const { return purchase_cost + maintenance_cost; }

  /// Benefit indicators in column order D, S, F, extras...
  [[nodiscard]] std::vector<double> indicators() const {
    std::vector<double> row{detection_range_m, stability, feasibility};
    row.insert(row.end(), extra_indicators.begin(), extra_indicators.end());
    return row;
  }
};

/// Column-wise Euclidean normalization: z_ij = x_ij / sqrt(sum_i x_ij^2).
inline Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) {
  if (x.rows() < 1 || x.cols() < 1) throw std::invalid_argument("standardize: empty matrix");
  if (!x.allFinite() || (x.array() < 0.0).any())
    throw std::invalid_argument("standardize: entries must be finite and nonnegative");
  Eigen::MatrixXd z = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = x.col(j).norm();
    if (!(norm > 0.0)) throw std::invalid_argument("standardize: column " + std::to_string(j) + " is all zero");
    z.col(j) /= norm;
  }
  return z;
}

struct EntropyWeights {
  Eigen::MatrixXd p;        ///< p_ij = z_ij / sum_i z_ij
  Eigen::VectorXd entropy;  ///< e_j in [0, 1]
  Eigen::VectorXd weight;   ///< W_j, sums to 1
  bool uniform_fallback = false;  ///< every column had e_j = 1; weights set equal
};

/// Entropy weight method over a standardized matrix (n >= 2 rows).
/// e_j = -(1/ln n) sum_i p_ij ln p_ij with 0 ln 0 = 0, W_j = (1 - e_j) / sum(1 - e).
inline EntropyWeights entropy_weights(const Eigen::MatrixXd& z) {
  const Eigen::Index n = z.rows();
  const Eigen::Index m = z.cols();
  if (n < 2) throw std::invalid_argument("entropy weights: need at least two alternatives");
  if (m < 1) throw std::invalid_argument("entropy weights: need at least one indicator");
  EntropyWeights out;
  out.p = z;
  out.entropy.resize(m);
  const double scale = 1.0 / std::log(static_cast<double>(n));
  for (Eigen::Index j = 0; j < m; ++j) {
    const double col_sum = z.col(j).sum();
    if (!(col_sum > 0.0)) throw std::invalid_argument("entropy weights: column has no mass");
    out.p.col(j) /= col_sum;
    double h = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pij = out.p(i, j);
      if (pij > 0.0) h -= pij * std::log(pij);
    }
    out.entropy(j) = std::clamp(h * scale, 0.0, 1.0);
  }
  const Eigen::VectorXd divergence = Eigen::VectorXd::Ones(m) - out.entropy;
  const double total = divergence.sum();
  if (!(total > 1e-12)) {
    out.weight = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    out.uniform_fallback = true;
  } else {
    out.weight = divergence / total;
  }
  return out;
}

struct CerEntry {
  std::string name;
  EquipmentRole role = EquipmentRole::detection;
  double benefit = 0.0;     ///< E_i
  double cost_share = 0.0;  ///< C_i
  double cer = 0.0;
  double total_cost = 0.0;
};

struct CerReport {
  std::vector<CerEntry> entries;
  std::map<EquipmentRole, EntropyWeights> weights;  ///< per role group
};

/// Indicator matrix of one group, rows in record order.
inline Eigen::MatrixXd decision_matrix(std::span<const EquipmentRecord> records) {
  if (records.empty()) throw std::invalid_argument("decision matrix: no records");
  const auto width = records.front().indicators().size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].validate();
    const auto row = records[i].indicators();
    if (row.size() != width) throw std::invalid_argument("decision matrix: records have different indicator counts");
    for (std::size_t j = 0; j < width; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return x;
}

/// Benefits E_i = sum_j W_j p_ij, cost shares C_i = C_total(i) / sum C_total
/// over the group, and CER = E_i / C_i, for one role group.
inline std::vector<CerEntry> score_and_cer(std::span<const EquipmentRecord> records, const EntropyWeights& w) {
  if (records.empty()) throw std::invalid_argument("cer: no records");
  if (static_cast<Eigen::Index>(records.size()) != w.p.rows())
    throw std::invalid_argument("cer: weights were computed for a different group");
  const auto role = records.front().role;
  double total = 0.0;
  for (const auto& r : records) {
    if (r.role != role) throw std::invalid_argument("cer: records must share one role group");
    if (!(r.total_cost() > 0.0)) throw std::invalid_argument("cer: '" + r.name + "' has zero total cost");
    total += r.total_cost();
  }
  const Eigen::VectorXd benefit = w.p * w.weight;
  std::vector<CerEntry> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    CerEntry e;
    e.name = records[i].name;
    e.role = role;
    e.benefit = benefit(static_cast<Eigen::Index>(i));
    e.total_cost = records[i].total_cost();
    e.cost_share = e.total_cost / total;
    e.cer = e.benefit / e.cost_share;
    out.push_back(e);
  }
  return out;
}

/// Runs the whole pipeline separately for every role group present.
/// A group with a single record gets E = 1, C = 1.
inline CerReport evaluate_equipment(std::span<const EquipmentRecord> records) {
  CerReport report;
  for (const auto role : {EquipmentRole::detection, EquipmentRole::rescue}) {
    std::vector<EquipmentRecord> group;
    for (const auto& r : records)
      if (r.role == role) group.push_back(r);
    if (group.empty()) continue;
    if (group.size() == 1) {
      group[0].validate();
      if (!(group[0].total_cost() > 0.0)) throw std::invalid_argument("cer: '" + group[0].name + "' has zero total cost");
      report.entries.push_back({group[0].name, role, 1.0, 1.0, 1.0, group[0].total_cost()});
      continue;
    }
    auto w = entropy_weights(standardize(decision_matrix(group)));
    auto entries = score_and_cer(group, w);
    report.entries.insert(report.entries.end(), entries.begin(), entries.end());
    report.weights.emplace(role, std::move(w));
  }
  return report;
}

struct RankedEntry {
  CerEntry entry;
  std::size_t rank = 0;  ///< 1-based within its role group
};

/// Descending CER within each role group (detection first); ties go to the
/// lower total cost, then the name.
inline std::vector<RankedEntry> rank_equipment(const CerReport& report) {
  std::vector<RankedEntry> out;
  for (const auto role : {EquipmentRole::detection, EquipmentRole::rescue}) {
    std::vector<CerEntry> group;
    for (const auto& e : report.entries)
      if (e.role == role) group.push_back(e);
    std::sort(group.begin(), group.end(), [](const CerEntry& a, const CerEntry& b) {
      if (a.cer != b.cer) return a.cer > b.cer;
      if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
      return a.name < b.name;
    });
    for (std::size_t i = 0; i < group.size(); ++i) out.push_back({group[i], i + 1});
  }
  return out;
}

inline EquipmentRole parse_role(std::string_view text) {
  std::string lower(csv::trim(text));
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "detection") return EquipmentRole::detection;
  if (lower == "rescue") return EquipmentRole::rescue;
  throw ParseError("equipment: unknown role '" + std::string(text) + "'");
}

/// Reads `name,role,purchase_cost,maintenance_cost,detection_range_m,stability,feasibility`.
inline std::vector<EquipmentRecord> load_equipment(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  static const std::vector<std::string> expected{"name",  "role", "purchase_cost", "maintenance_cost",
                                                 "detection_range_m", "stability", "feasibility"};
  if (table.header != expected)
    throw ParseError("equipment: header must be " + csv::join(expected));
  std::vector<EquipmentRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto where = "equipment line " + std::to_string(table.line_numbers[r]);
    if (f.size() != 7) throw ParseError(where + ": expected 7 fields");
    EquipmentRecord rec;
    rec.name = f[0];
    rec.role = parse_role(f[1]);
    rec.purchase_cost = csv::parse_double(f[2], where);
    rec.maintenance_cost = csv::parse_double(f[3], where);
    rec.detection_range_m = csv::parse_double(f[4], where);
    rec.stability = csv::parse_double(f[5], where);
    rec.feasibility = csv::parse_double(f[6], where);
    try {
      rec.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw ParseError("equipment: no records");
  return out;
}

/// `name,role,E,C,CER,rank`
inline std::string cer_report_to_csv(std::span<const RankedEntry> ranked) {
  std::string out = "name,role,E,C,CER,rank\n";
  for (const auto& r : ranked) {
    out += r.entry.name + ',' + to_string(r.entry.role) + ',' + csv::format_number(r.entry.benefit) + ',' +
           csv::format_number(r.entry.cost_share) + ',' + csv::format_number(r.entry.cer) + ',' +
           std::to_string(r.rank) + '\n';
  }
  return out;
}

}  // namespace subsea
