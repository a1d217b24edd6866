#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cogrowth/error.hpp"
#include "cogrowth/sampler.hpp"

namespace cogrowth {

struct BlockEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  std::size_t block_size = 0;
  std::size_t num_blocks = 0;
};

// floor(N/M) block averages; the trailing partial block is dropped.
inline std::vector<double> block_means(std::span<const double> series, std::size_t block_size) {
  if (block_size == 0) throw validation_error("block size must be >= 1");
  if (block_size > series.size()) throw validation_error("block size exceeds series length");
  const std::size_t nb = series.size() / block_size;
  std::vector<double> out(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto first = series.begin() + static_cast<std::ptrdiff_t>(i * block_size);
    out[i] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(block_size), 0.0) /
             static_cast<double>(block_size);
  }
  return out;
}

// sigma^2 = s^2 / (B - 1) with s^2 = <[O]^2> - <[O]>^2 over B blocks of size M.
inline BlockEstimate block_stderr(std::span<const double> series, std::size_t block_size) {
  const auto means = block_means(series, block_size);
  const std::size_t nb = means.size();
  if (nb < 2) throw validation_error("block_stderr needs at least two blocks");
  double s = 0.0;
  double s2 = 0.0;
  for (double m : means) {
    s += m;
    s2 += m * m;
  }
  const double mean = s / static_cast<double>(nb);
  const double var = std::max(0.0, s2 / static_cast<double>(nb) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(nb - 1)), block_size, nb};
}

struct BlockingAnalysis {
  std::vector<BlockEstimate> by_block_size;  // M = 1, 2, 4, ...
  BlockEstimate selected;
  bool plateau = false;
};

// Doubles M until two consecutive stderr estimates agree within `tolerance`
// (relative), keeping at least `min_blocks` blocks.
inline BlockingAnalysis block_stderr_plateau(std::span<const double> series,
                                             double tolerance = 0.05,
                                             std::size_t min_blocks = 16) {
  BlockingAnalysis out;
  for (std::size_t m = 1; series.size() / m >= std::max<std::size_t>(2, min_blocks); m *= 2) {
    out.by_block_size.push_back(block_stderr(series, m));
  }
  if (out.by_block_size.empty()) throw validation_error("series too short for blocking");
  out.selected = out.by_block_size.back();
  for (std::size_t i = 0; i + 1 < out.by_block_size.size(); ++i) {
    const double a = out.by_block_size[i].stderr;
    const double b = out.by_block_size[i + 1].stderr;
    if (a == b || std::abs(b - a) <= tolerance * std::max(a, b)) {
      out.selected = out.by_block_size[i + 1];
      out.plateau = true;
      break;
    }
  }
  return out;
}

// Connected autocorrelation S(k) = <O_i O_{i+k}> - <O>^2.
inline double autocorrelation(std::span<const double> series, std::size_t lag) {
  const std::size_t n = series.size();
  if (lag >= n) throw validation_error("lag must be smaller than the series length");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) acc += series[i] * series[i + lag];
  return acc / static_cast<double>(n - lag) - mean * mean;
}

// tau_int = 1/2 + sum_{k>=1} S(k)/S(0), truncated before the first negative term.
// With this convention the variance of the mean is 2 tau_int S(0) / N.
inline double integrated_autocorrelation_time(std::span<const double> series,
                                              std::size_t max_lag = 0) {
  const double s0 = autocorrelation(series, 0);
  if (s0 <= 0.0) return 0.5;
  if (max_lag == 0) max_lag = series.size() / 2;
  double tau = 0.5;
  for (std::size_t k = 1; k < std::min(max_lag, series.size()); ++k) {
    const double rho = autocorrelation(series, k) / s0;
    if (rho < 0.0) break;
    tau += rho;
  }
  return tau;
}

// sum(f1)/sum(f2) with a leave-one-block-out jackknife error.
inline BlockEstimate ratio_estimate(std::span<const double> f1, std::span<const double> f2) {
  if (f1.size() != f2.size() || f1.empty()) {
    throw validation_error("ratio estimator needs matching nonempty block sums");
  }
  const double s1 = std::accumulate(f1.begin(), f1.end(), 0.0);
  const double s2 = std::accumulate(f2.begin(), f2.end(), 0.0);
  if (!(s2 > 0.0)) throw validation_error("ratio estimator: denominator is zero");
  BlockEstimate out;
  out.mean = s1 / s2;
  out.num_blocks = f1.size();
  const std::size_t nb = f1.size();
  if (nb < 2) return out;
  std::vector<double> jack(nb);
  double jmean = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    const double rest = s2 - f2[i];
    jack[i] = rest > 0.0 ? (s1 - f1[i]) / rest : out.mean;
    jmean += jack[i];
  }
  jmean /= static_cast<double>(nb);
  double ss = 0.0;
  for (double j : jack) ss += (j - jmean) * (j - jmean);
  out.stderr = std::sqrt(ss * static_cast<double>(nb - 1) / static_cast<double>(nb));
  return out;
}

// Canonical (alpha-independent) mean length from sampler output.
inline BlockEstimate ratio_estimator(const ObservableSeries& obs) {
  std::vector<double> f1;
  std::vector<double> f2;
  std::uint64_t samples = 0;
  for (const auto& b : obs.blocks) {
    f1.push_back(b.sum_f1);
    f2.push_back(b.sum_f2);
    samples += b.count;
  }
  auto est = ratio_estimate(f1, f2);
  est.block_size = obs.blocks.empty() ? 0 : static_cast<std::size_t>(samples / obs.blocks.size());
  return est;
}

// How to read a coefficient sequence: as a prefix of an infinite series, or as
// the complete (finitely supported) sequence.
enum class SeriesTail { truncated, exact };

// sum n (n+1)^{1+a} d_n b^n / sum (n+1)^{1+a} d_n b^n over n >= 1.
// alpha = -1 gives the canonical Boltzmann mean. For a truncated series it stops
// once a geometric tail bound drops below 1e-12 of both sums and throws if the
// terms never decay enough. An exact sequence is summed in full.
inline double exact_canonical_mean(std::span<const double> d, double beta, double alpha,
                                   SeriesTail tail = SeriesTail::truncated) {
  if (!(beta > 0.0)) throw validation_error("beta must be positive");
  if (tail == SeriesTail::exact) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 1; n < d.size(); ++n) {
      if (d[n] < 0.0) throw validation_error("coefficients must be nonnegative");
      if (d[n] == 0.0) continue;
      const double t = std::exp(std::log(d[n]) + static_cast<double>(n) * std::log(beta) +
                                (1.0 + alpha) * std::log(static_cast<double>(n) + 1.0));
      num += static_cast<double>(n) * t;
      den += t;
    }
    if (!(den > 0.0)) throw validation_error("exact_canonical_mean: no nonzero coefficients beyond n = 0");
    return num / den;
  }
  constexpr double kTol = 1e-12;
  double num = 0.0;
  double den = 0.0;
  std::optional<std::pair<std::size_t, double>> prev;
  int settled = 0;
  for (std::size_t n = 1; n < d.size(); ++n) {
    if (d[n] < 0.0) throw validation_error("coefficients must be nonnegative");
    if (d[n] == 0.0) continue;
    const double log_t = std::log(d[n]) + static_cast<double>(n) * std::log(beta) +
                         (1.0 + alpha) * std::log(static_cast<double>(n) + 1.0);
    const double t = std::exp(log_t);
    num += static_cast<double>(n) * t;
    den += t;
    if (prev) {
      const double rho =
          std::exp((log_t - prev->second) / static_cast<double>(n - prev->first));
      if (rho < 1.0) {
        const double g = rho / (1.0 - rho);
        const double tail_den = t * g;
        const double tail_num = t * (static_cast<double>(n) * g + g / (1.0 - rho));
        if (tail_den < kTol * den && tail_num < kTol * num) {
          if (++settled >= 3) return num / den;
        } else {
          settled = 0;
        }
      } else {
        settled = 0;
      }
    }
    prev = {n, log_t};
  }
  if (prev && den > 0.0) {
    const auto n = prev->first;
    // Decaying but too short versus non-decaying: both are failures, reported distinctly.
    throw validation_error("exact_canonical_mean: series does not converge to 1e-12 at beta=" +
                           std::to_string(beta) + " within " + std::to_string(n) +
                           " terms (beta at or beyond the radius, or too few terms)");
  }
  throw validation_error("exact_canonical_mean: no nonzero coefficients beyond n = 0");
}

struct FitPoint {
  double beta = 0.0;
  double value = 0.0;   // reciprocal stderr
  double weight = 1.0;  // used only for weighted fits
};

struct AnalysisResult {
  double beta_c_estimate = 0.0;
  double beta_c_uncertainty = 0.0;  // delta-method error from the fit covariance
  int fit_degree = 1;
  double residual = 0.0;            // RMS of fit residuals
  std::vector<double> coefficients; // c0 + c1 x + c2 x^2
  std::size_t generators = 0;
  double threshold = 0.0;
};

// Least-squares polynomial fit of reciprocal stderr against beta; beta_c is the
// smallest real root beyond the largest beta in the data.
inline AnalysisResult intercept_extrapolate(std::span<const FitPoint> points, int degree,
                                            bool weighted = false) {
  if (degree != 1 && degree != 2) throw validation_error("fit degree must be 1 or 2");
  const std::size_t n = points.size();
  if (n < static_cast<std::size_t>(degree) + 2) {
    throw validation_error("need at least degree+2 points for the intercept fit");
  }
  double ymin = points[0].value;
  double ymax = points[0].value;
  double xmax = points[0].beta;
  for (const auto& p : points) {
    ymin = std::min(ymin, p.value);
    ymax = std::max(ymax, p.value);
    xmax = std::max(xmax, p.beta);
  }
  if (ymax - ymin <= 1e-14 * std::max(1.0, std::abs(ymax))) {
    throw validation_error("degenerate (constant) input: no crossing");
  }

  const int p = degree + 1;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? std::sqrt(points[i].weight) : 1.0;
    double pw = 1.0;
    for (int j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), j) = w * pw;
      pw *= points[i].beta;
    }
    y(static_cast<Eigen::Index>(i)) = w * points[i].value;
  }
  const Eigen::VectorXd c = x.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - x * c;
  const double ssr = resid.squaredNorm();

  AnalysisResult out;
  out.fit_degree = degree;
  out.coefficients.assign(c.data(), c.data() + p);
  out.residual = std::sqrt(ssr / static_cast<double>(n));

  auto eval_deriv = [&](double r) { return degree == 1 ? c(1) : c(1) + 2.0 * c(2) * r; };
  std::optional<double> root;
  if (degree == 1) {
    if (c(1) == 0.0) throw validation_error("degenerate fit: zero slope");
    const double r = -c(0) / c(1);
    if (r > xmax) root = r;
  } else {
    const double a = c(2), b = c(1), c0 = c(0);
    if (a == 0.0) {
      if (b != 0.0 && -c0 / b > xmax) root = -c0 / b;
    } else {
      double disc = b * b - 4.0 * a * c0;
      // A double root can come out marginally negative through rounding.
      if (disc < 0.0 && disc > -1e-10 * (b * b + std::abs(4.0 * a * c0))) disc = 0.0;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        // Stable pair of roots.
        const double qq = -0.5 * (b + std::copysign(sq, b));
        std::vector<double> roots;
        if (qq != 0.0) roots.push_back(c0 / qq);
        roots.push_back(qq / a);
        std::sort(roots.begin(), roots.end());
        for (double r : roots) {
          if (r > xmax) {
            root = r;
            break;
          }
        }
      }
    }
  }
  if (!root) throw validation_error("fit has no real root beyond the data range");
  out.beta_c_estimate = *root;

  const std::size_t dof = n - static_cast<std::size_t>(p);
  if (dof > 0) {
    const double s2 = ssr / static_cast<double>(dof);
    const Eigen::MatrixXd cov = s2 * (x.transpose() * x).inverse();
    const double deriv = eval_deriv(*root);
    if (deriv != 0.0) {
      Eigen::VectorXd g(p);
      double pw = 1.0;
      for (int j = 0; j < p; ++j) {
        g(j) = -pw / deriv;
        pw *= *root;
      }
      out.beta_c_uncertainty = std::sqrt(std::max(0.0, double(g.transpose() * cov * g)));
    }
  }
  return out;
}

struct AmenabilityReport {
  std::size_t generators = 0;
  double threshold = 0.0;
  double beta_c = 0.0;
  double uncertainty = 0.0;
  bool consistent_with_amenable = false;
  std::string verdict;
};

// Compares beta_c with 1/(2k-1). The verdict is a statistical signal, not a proof.
inline AmenabilityReport amenability_report(const AnalysisResult& result, std::size_t generators,
                                            std::optional<double> uncertainty = std::nullopt) {
  if (generators == 0) throw validation_error("generator count must be >= 1");
  AmenabilityReport r;
  r.generators = generators;
  r.threshold = 1.0 / (2.0 * static_cast<double>(generators) - 1.0);
  r.beta_c = result.beta_c_estimate;
  r.uncertainty = uncertainty.value_or(result.beta_c_uncertainty);
  if (r.beta_c - r.uncertainty > r.threshold) {
    r.consistent_with_amenable = false;
    r.verdict = "not amenable signal (statistical evidence only, not a proof)";
  } else {
    r.consistent_with_amenable = true;
    r.verdict = "consistent with amenable (statistical evidence only, not a proof)";
  }
  return r;
}

}  // namespace cogrowth
