#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cgl/rng.hpp"

namespace cgl {

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);  // unbiased
double std_error(const std::vector<double>& x);
double percentile(std::vector<double> x, double q);  // q in [0,1]

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double rss = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// One-sample Kolmogorov-Smirnov statistic against a cdf.
double ks_statistic(std::vector<double> data, const std::function<double(double)>& cdf);
/// Two-sample KS statistic.
double ks_statistic_two(std::vector<double> a, std::vector<double> b);
/// Asymptotic critical value sqrt(-ln(alpha/2)/2)/sqrt(n) for one sample.
double ks_critical(std::size_t n, double alpha);
/// Two-sample version with effective size n*m/(n+m).
double ks_critical_two(std::size_t n, std::size_t m, double alpha);

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
};

/// Percentile CI for the mean, i.i.d. resampling.
BootstrapCi bootstrap_mean_ci(const std::vector<double>& x, int n_resamples,
                              double alpha, std::uint64_t seed);
/// Moving-block bootstrap for correlated series (block ~ sqrt(n)).
BootstrapCi block_bootstrap_mean_ci(const std::vector<double>& x, int n_resamples,
                                    double alpha, std::uint64_t seed);

std::vector<double> moving_median(const std::vector<double>& x, int window);

/// Deterministic parallel map: fn(i) for i in [0, n), ordered results,
/// work distributed over `threads` workers (0 = hardware concurrency).
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace cgl
