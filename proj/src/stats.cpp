#include "cgl/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace cgl {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance needs >= 2 samples");
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

double std_error(const std::vector<double>& x) {
  return std::sqrt(variance(x) / double(x.size()));
}

double percentile(std::vector<double> x, double q) {
  if (x.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(x.begin(), x.end());
  double pos = q * double(x.size() - 1);
  std::size_t lo = std::size_t(std::floor(pos));
  std::size_t hi = std::min(lo + 1, x.size() - 1);
  double frac = pos - double(lo);
  return x[lo] * (1.0 - frac) + x[hi] * frac;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need matched samples, >= 2 points");
  double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  LinearFit fit;
  if (denom == 0.0) {
    fit.intercept = sy / n;
  } else {
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
  }
  double ym = sy / n, tss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.rss += r * r;
    tss += (y[i] - ym) * (y[i] - ym);
  }
  fit.r2 = (tss > 0.0) ? 1.0 - fit.rss / tss : 1.0;
  return fit;
}

double ks_statistic(std::vector<double> data, const std::function<double(double)>& cdf) {
  if (data.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(data.begin(), data.end());
  double n = double(data.size());
  double d = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double f = cdf(data[i]);
    d = std::max(d, std::abs(f - double(i) / n));
    d = std::max(d, std::abs(double(i + 1) / n - f));
  }
  return d;
}

double ks_statistic_two(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic_two: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / double(a.size()) - double(j) / double(b.size())));
  }
  return d;
}

double ks_critical(std::size_t n, double alpha) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(double(n));
}

double ks_critical_two(std::size_t n, std::size_t m, double alpha) {
  double ne = double(n) * double(m) / double(n + m);
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(ne);
}

static BootstrapCi ci_from_resamples(std::vector<double>& means, double alpha) {
  BootstrapCi ci;
  double m = mean(means);
  double s = 0.0;
  for (double v : means) s += (v - m) * (v - m);
  ci.se = std::sqrt(s / double(means.size() - 1));
  ci.lo = percentile(means, alpha / 2.0);
  ci.hi = percentile(means, 1.0 - alpha / 2.0);
  return ci;
}

BootstrapCi bootstrap_mean_ci(const std::vector<double>& x, int n_resamples,
                              double alpha, std::uint64_t seed) {
  if (x.size() < 2) throw std::invalid_argument("bootstrap: need >= 2 samples");
  CounterRng rng(seed);
  std::vector<double> means(n_resamples);
  for (int r = 0; r < n_resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += x[std::size_t(rng.uniform01() * double(x.size()))];
    means[r] = s / double(x.size());
  }
  return ci_from_resamples(means, alpha);
}

BootstrapCi block_bootstrap_mean_ci(const std::vector<double>& x, int n_resamples,
                                    double alpha, std::uint64_t seed) {
  if (x.size() < 4) throw std::invalid_argument("block bootstrap: need >= 4 samples");
  std::size_t n = x.size();
  std::size_t block = std::max<std::size_t>(2, std::size_t(std::sqrt(double(n))));
  std::size_t n_blocks = (n + block - 1) / block;
  CounterRng rng(seed);
  std::vector<double> means(n_resamples);
  for (int r = 0; r < n_resamples; ++r) {
    double s = 0.0;
    std::size_t cnt = 0;
    for (std::size_t bidx = 0; bidx < n_blocks; ++bidx) {
      std::size_t start = std::size_t(rng.uniform01() * double(n));
      for (std::size_t k = 0; k < block && cnt < n; ++k, ++cnt)
        s += x[(start + k) % n];  // circular blocks
    }
    means[r] = s / double(cnt);
  }
  return ci_from_resamples(means, alpha);
}

std::vector<double> moving_median(const std::vector<double>& x, int window) {
  if (window < 1) throw std::invalid_argument("moving_median: window must be >= 1");
  std::vector<double> out;
  if (int(x.size()) < window) return out;
  for (std::size_t i = 0; i + window <= x.size(); ++i) {
    std::vector<double> w(x.begin() + i, x.begin() + i + window);
    std::sort(w.begin(), w.end());
    out.push_back(w[w.size() / 2]);
  }
  return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = int(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cgl
