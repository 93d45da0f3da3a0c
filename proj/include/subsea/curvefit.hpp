#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subsea/csv.hpp"

namespace subsea {

/// y(x) = A2 + (A1 - A2) / (1 + exp((x - x0) / dx))
struct BoltzmannParams {
  double a1 = 0.0;  ///< asymptote as (x - x0)/dx -> -inf
  double a2 = 1.0;  ///< asymptote as (x - x0)/dx -> +inf
  double x0 = 0.0;
  double dx = 1.0;

  void validate() const {
    if (dx == 0.0 || !std::isfinite(dx)) throw std::invalid_argument("boltzmann: dx must be finite and nonzero");
    if (!std::isfinite(a1) || !std::isfinite(a2) || !std::isfinite(x0))
      throw std::invalid_argument("boltzmann: parameters must be finite");
  }

  /// Same curve with dx > 0.
  [[nodiscard]] BoltzmannParams canonical() const {
    if (dx > 0.0) return *this;
    return {a2, a1, x0, -dx};
  }
};

namespace detail {

// 1 / (1 + e^u) without overflow.
inline double logistic_complement(double u) {
  if (u >= 0.0) {
    const double e = std::exp(-u);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(u));
}

}  // namespace detail

inline double boltzmann_eval(const BoltzmannParams& p, double x) {
  const double s = detail::logistic_complement((x - p.x0) / p.dx);
  return p.a2 + (p.a1 - p.a2) * s;
}

/// Partial derivatives of boltzmann_eval with respect to (A1, A2, x0, dx).
inline std::array<double, 4> boltzmann_gradient(const BoltzmannParams& p, double x) {
  const double u = (x - p.x0) / p.dx;
  const double s = detail::logistic_complement(u);
  const double ds = s * (1.0 - s);
  const double amp = p.a1 - p.a2;
  return {s, 1.0 - s, amp * ds / p.dx, amp * ds * u / p.dx};
}

struct FitReport {
  BoltzmannParams params;
  double sse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool identifiable = true;  ///< false when the data are constant: x0, dx carry no information
  bool midpoint_in_range = true;  ///< x0 lies within the sampled x range
  std::vector<double> sse_history;  ///< SSE after the start and after every accepted step
};

struct FitOptions {
  std::size_t max_iterations = 1000;
  double relative_tolerance = 1.5e-8;
};

namespace detail {

inline double sum_squared_residuals(const BoltzmannParams& p, std::span<const double> xs, std::span<const double> ys) {
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - boltzmann_eval(p, xs[i]);
    sse += r * r;
  }
  return sse;
}

inline void check_series(std::span<const double> xs, std::span<const double> ys, std::size_t min_points) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit: x and y lengths differ");
  if (xs.size() < min_points)
    throw std::invalid_argument("fit: need at least " + std::to_string(min_points) + " points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw std::invalid_argument("fit: non-finite data");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw std::invalid_argument("fit: x must be strictly increasing");
  }
}

}  // namespace detail

/// Least-squares Boltzmann fit by damped Gauss-Newton (Levenberg-Marquardt).
///
/// Starts from A1 = first y, A2 = last y, x0 = median x, dx = x range / 10.
/// Steps that raise the SSE are rejected and the damping grows tenfold;
/// accepted steps shrink it tenfold. Converges when an accepted step changes
/// the SSE by less than the relative tolerance. The result always has dx > 0.
inline FitReport fit_boltzmann(std::span<const double> xs, std::span<const double> ys, const FitOptions& options = {}) {
  detail::check_series(xs, ys, 5);
  const std::size_t n = xs.size();
  FitReport report;

  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  if (*ymin == *ymax) {
    report.params = {ys[0], ys[0], xs[n / 2], (xs[n - 1] - xs[0]) / 10.0};
    report.converged = true;
    report.identifiable = false;
    return report;
  }

  BoltzmannParams p{ys[0], ys[n - 1], n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]),
                    (xs[n - 1] - xs[0]) / 10.0};
  double sse = detail::sum_squared_residuals(p, xs, ys);
  report.sse_history.push_back(sse);
  double damping = 1e-3;
  Eigen::MatrixXd jac(n, 4);
  Eigen::VectorXd res(n);

  while (report.iterations < options.max_iterations) {
    ++report.iterations;
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = boltzmann_gradient(p, xs[i]);
      for (int j = 0; j < 4; ++j) jac(static_cast<Eigen::Index>(i), j) = g[static_cast<std::size_t>(j)];
      res(static_cast<Eigen::Index>(i)) = ys[i] - boltzmann_eval(p, xs[i]);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * res;

    bool accepted = false;
    while (damping < 1e16) {
      Eigen::Matrix4d a = jtj;
      for (int j = 0; j < 4; ++j) a(j, j) += damping * std::max(jtj(j, j), 1e-12);
      const Eigen::Vector4d step = a.ldlt().solve(jtr);
      const BoltzmannParams trial{p.a1 + step(0), p.a2 + step(1), p.x0 + step(2), p.dx + step(3)};
      const double trial_sse = (trial.dx != 0.0 && step.allFinite())
                                   ? detail::sum_squared_residuals(trial, xs, ys)
                                   : std::numeric_limits<double>::infinity();
      if (trial_sse <= sse) {
        const double change = sse - trial_sse;
        p = trial;
        sse = trial_sse;
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
        report.sse_history.push_back(sse);
        if (change <= options.relative_tolerance * std::max(sse + change, 1e-300)) report.converged = true;
        break;
      }
      damping *= 10.0;
    }
    // No downhill step at any damping: the current point is a minimum to
    // working precision.
    if (!accepted) report.converged = true;
    if (report.converged || sse == 0.0) {
      report.converged = true;
      break;
    }
  }
  report.params = p.canonical();
  report.sse = sse;
  report.midpoint_in_range = p.x0 >= xs[0] && p.x0 <= xs[n - 1];
  return report;
}

/// Curvature-weighted subset of a series.
///
/// Always keeps both endpoints. The other budget - 2 picks go to interior
/// points by inverse-CDF placement over weights |second difference of y|
/// plus a floor of 10 % of the mean weight, so flat stretches keep a few
/// points and bends keep many. Returns sorted indices; a budget >= n returns
/// every index.
inline std::vector<std::size_t> thin_points(std::span<const double> xs, std::span<const double> ys, std::size_t budget) {
  if (xs.size() != ys.size()) throw std::invalid_argument("thin: x and y lengths differ");
  if (budget < 4) throw std::invalid_argument("thin: budget must be >= 4");
  const std::size_t n = xs.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (budget >= n) return all;

  const std::size_t interior = n - 2;
  std::vector<double> w(interior);
  double peak = 0.0;
  double yscale = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    w[i - 1] = std::abs(ys[i + 1] - 2.0 * ys[i] + ys[i - 1]);
    peak = std::max(peak, w[i - 1]);
  }
  for (double y : ys) yscale = std::max(yscale, std::abs(y));
  if (peak <= 1e-12 * std::max(yscale, 1e-300)) {
    std::fill(w.begin(), w.end(), 1.0);  // straight line: spread evenly
  } else {
    const double floor = 0.1 * std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(interior);
    for (double& v : w) v += floor;
  }
  std::vector<double> cdf(interior);
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  const double total = cdf.back();

  const std::size_t picks = budget - 2;
  std::vector<bool> taken(interior, false);
  for (std::size_t k = 0; k < picks; ++k) {
    const double target = (static_cast<double>(k) + 0.5) / static_cast<double>(picks) * total;
    auto idx = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    idx = std::min(idx, interior - 1);
    // Collisions move to the nearest free slot, preferring the right.
    for (std::size_t off = 0; off < interior; ++off) {
      if (idx + off < interior && !taken[idx + off]) {
        idx += off;
        break;
      }
      if (off <= idx && !taken[idx - off]) {
        idx -= off;
        break;
      }
    }
    taken[idx] = true;
  }
  std::vector<std::size_t> out{0};
  for (std::size_t i = 0; i < interior; ++i)
    if (taken[i]) out.push_back(i + 1);
  out.push_back(n - 1);
  return out;
}

/// Plain-text fit report.
inline std::string fit_report_text(const FitReport& r) {
  std::ostringstream os;
  os << "model: y = A2 + (A1 - A2) / (1 + exp((x - x0) / dx))\n"
     << "A1: " << csv::format_number(r.params.a1) << '\n'
     << "A2: " << csv::format_number(r.params.a2) << '\n'
     << "x0: " << csv::format_number(r.params.x0) << '\n'
     << "dx: " << csv::format_number(r.params.dx) << '\n'
     << "sse: " << csv::format_number(r.sse) << '\n'
     << "iterations: " << r.iterations << '\n'
     << "converged: " << (r.converged ? "true" : "false") << '\n'
     << "identifiable: " << (r.identifiable ? "true" : "false") << '\n'
     << "x0_within_data: " << (r.midpoint_in_range ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace subsea
