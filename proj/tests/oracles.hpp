#pragma once

// Brute-force reference computations used only by the tests. Nothing here
// shares code with the library's sorted risk-set sweep.

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "survinfo/dataset.hpp"

namespace oracle {

// Log partial likelihood by scanning every subject for every distinct event
// time. Efron: the k-th of d tied deaths sees the risk-set sum minus k/d of
// the tied-death weight.
inline double log_partial_likelihood(const survinfo::Dataset& d, const Eigen::VectorXd& beta,
                                     bool efron) {
  std::set<double> event_times;
  for (const auto& o : d) {
    if (o.status == 1) event_times.insert(o.time);
  }
  double ll = 0.0;
  for (double t : event_times) {
    double risk = 0.0;
    double tied = 0.0;
    int deaths = 0;
    for (const auto& o : d) {
      const double w = std::exp(o.covariates.dot(beta));
      if (o.time >= t) risk += w;
      if (o.time == t && o.status == 1) {
        tied += w;
        ll += o.covariates.dot(beta);
        ++deaths;
      }
    }
    for (int k = 0; k < deaths; ++k) {
      ll -= std::log(risk - (efron ? static_cast<double>(k) / deaths : 0.0) * tied);
    }
  }
  return ll;
}

// Score for a single covariate, by the same enumeration.
inline double score_1d(const survinfo::Dataset& d, double beta, bool efron) {
  std::set<double> event_times;
  for (const auto& o : d) {
    if (o.status == 1) event_times.insert(o.time);
  }
  double g = 0.0;
  for (double t : event_times) {
    double r0 = 0, r1 = 0, e0 = 0, e1 = 0;
    int deaths = 0;
    for (const auto& o : d) {
      const double z = o.covariates[0];
      const double w = std::exp(beta * z);
      if (o.time >= t) {
        r0 += w;
        r1 += w * z;
      }
      if (o.time == t && o.status == 1) {
        e0 += w;
        e1 += w * z;
        g += z;
        ++deaths;
      }
    }
    for (int k = 0; k < deaths; ++k) {
      const double f = efron ? static_cast<double>(k) / deaths : 0.0;
      g -= (r1 - f * e1) / (r0 - f * e0);
    }
  }
  return g;
}

// Root of a decreasing function on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd up = x, down = x;
    up[k] += h;
    down[k] -= h;
    g[k] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

// Breslow cumulative hazard at t by direct summation over risk sets.
inline double breslow_cumhaz_at(const survinfo::Dataset& d, const Eigen::VectorXd& beta,
                                double t) {
  std::set<double> event_times;
  for (const auto& o : d) {
    if (o.status == 1 && o.time <= t) event_times.insert(o.time);
  }
  double total = 0.0;
  for (double u : event_times) {
    double risk = 0.0;
    int deaths = 0;
    for (const auto& o : d) {
      if (o.time >= u) risk += std::exp(o.covariates.dot(beta));
      if (o.time == u && o.status == 1) ++deaths;
    }
    total += deaths / risk;
  }
  return total;
}

// Conditional distribution of X given X > t_cens, enumerated from the atoms.
inline std::map<double, double> conditional_probabilities(const std::vector<double>& times,
                                                          const std::vector<double>& probs,
                                                          double tail_time, double tail_prob,
                                                          double t_cens) {
  std::map<double, double> out;
  double remaining = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] > t_cens) {
      out[times[k]] += probs[k];
      remaining += probs[k];
    }
  }
  if (tail_time > t_cens) {
    out[tail_time] += tail_prob;
    remaining += tail_prob;
  }
  for (auto& [t, p] : out) p /= remaining;
  return out;
}

}  // namespace oracle
