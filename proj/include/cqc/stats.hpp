#pragma once

// Small statistics toolbox used across the test oracles and ensemble
// summaries: weighted histograms, Kolmogorov-Smirnov statistics, batch-means
// standard errors, and least-squares line fits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cqc/common.hpp"

namespace cqc {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<double> weights;  // per bin, weighted counts
  double total = 0.0;
  double underflow = 0.0, overflow = 0.0;

  Histogram() = default;
  Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), weights(bins, 0.0) {
    require(hi > lo && bins >= 1, "Histogram: bad range or bin count");
  }

  int bins() const { return static_cast<int>(weights.size()); }
  double bin_width() const { return (hi - lo) / bins(); }
  double bin_center(int i) const { return lo + (i + 0.5) * bin_width(); }

  void add(double x, double w = 1.0) {
    total += w;
    if (x < lo) {
      underflow += w;
      return;
    }
    if (x >= hi) {
      overflow += w;
      return;
    }
    int i = static_cast<int>((x - lo) / bin_width());
    if (i >= bins()) i = bins() - 1;
    weights[static_cast<size_t>(i)] += w;
  }

  // normalized so that sum(density * bin_width) + under + over = 1
  double density(int i) const {
    return total > 0.0 ? weights[static_cast<size_t>(i)] / (total * bin_width()) : 0.0;
  }
};

// Two-sided KS statistic of weighted samples against a continuous CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  require(!samples.empty(), "ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(hi - f), std::abs(f - lo)));
  }
  return d;
}

// Asymptotic critical value for the two-sided KS test.
inline double ks_critical_value(double alpha, int n) {
  require(n > 0, "ks_critical_value: n must be positive");
  // K_alpha with P(D > K_alpha / sqrt(n)) = alpha; sqrt(-ln(alpha/2)/2)
  double k = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return k / std::sqrt(static_cast<double>(n));
}

struct MeanErr {
  double mean = 0.0;
  double se = 0.0;
};

// Batch-means standard error (robust to mild correlation between draws).
inline MeanErr batch_means(const std::vector<double>& xs, int n_batches = 20) {
  require(static_cast<int>(xs.size()) >= n_batches && n_batches >= 2,
          "batch_means: not enough samples");
  const int per = static_cast<int>(xs.size()) / n_batches;
  std::vector<double> means(static_cast<size_t>(n_batches), 0.0);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (int i = 0; i < per; ++i) s += xs[static_cast<size_t>(b * per + i)];
    means[static_cast<size_t>(b)] = s / per;
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= n_batches;
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (n_batches - 1);
  return {grand, std::sqrt(var / n_batches)};
}

// Least-squares slope and intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_line: need matched samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  require(denom != 0.0, "fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

inline double pearson_correlation(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "pearson_correlation: bad input");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  double cov = sxy / n - (sx / n) * (sy / n);
  double vx = sxx / n - (sx / n) * (sx / n);
  double vy = syy / n - (sy / n) * (sy / n);
  return cov / std::sqrt(vx * vy);
}

}  // namespace cqc
