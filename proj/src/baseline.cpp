#include "survinfo/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survinfo/errors.hpp"

namespace survinfo {

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> jump_sizes)
    : times_(std::move(jump_times)), sizes_(std::move(jump_sizes)) {
  if (times_.size() != sizes_.size()) {
    throw InputError("InvalidStepFunction", "jump times and sizes differ in length");
  }
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!(sizes_[k] > 0.0)) {
      throw InputError("InvalidStepFunction", "jump sizes must be positive");
    }
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw InputError("InvalidStepFunction", "jump times must be strictly increasing");
    }
  }
}

double StepFunction::operator()(double t) const {
  double total = 0.0;
  for (std::size_t k = 0; k < times_.size() && times_[k] <= t; ++k) total += sizes_[k];
  return total;
}

DiscreteSurvival::DiscreteSurvival(std::vector<double> atom_times,
                                   std::vector<double> atom_probs, double tail_time,
                                   double tail_prob)
    : times_(std::move(atom_times)),
      probs_(std::move(atom_probs)),
      tail_time_(tail_time),
      tail_prob_(tail_prob) {
  if (times_.size() != probs_.size()) {
    throw InputError("InvalidSurvival", "atom times and probabilities differ in length");
  }
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!(probs_[k] >= 0.0) || probs_[k] > 1.0) {
      throw InputError("InvalidSurvival", "atom probability outside [0, 1]");
    }
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw InputError("InvalidSurvival", "atom times must be strictly increasing");
    }
  }
  if (!times_.empty() && tail_time_ < times_.back()) {
    throw InputError("InvalidSurvival", "tail time precedes the last atom");
  }
  if (!(tail_prob_ >= 0.0) || tail_prob_ > 1.0) {
    throw InputError("InvalidSurvival", "tail probability outside [0, 1]");
  }
  if (std::abs(total_mass() - 1.0) > 1e-12) {
    throw InputError("InvalidSurvival", "probabilities do not sum to one");
  }
}

double DiscreteSurvival::survival(double t) const {
  double s = t < tail_time_ ? tail_prob_ : 0.0;
  for (std::size_t k = times_.size(); k-- > 0 && times_[k] > t;) s += probs_[k];
  return s;
}

double DiscreteSurvival::total_mass() const {
  return std::accumulate(probs_.begin(), probs_.end(), tail_prob_);
}

StepFunction breslow_cumhaz(const Dataset& d, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != d.dim()) {
    throw InputError("DimensionMismatch", "beta has the wrong length");
  }
  if (d.events() == 0) throw NoEvents("dataset has no observed events");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a].time > d[b].time; });

  std::vector<double> times;
  std::vector<double> sizes;
  double risk = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = d[order[pos]].time;
    int deaths = 0;
    for (; pos < order.size() && d[order[pos]].time == t; ++pos) {
      const auto& o = d[order[pos]];
      risk += std::exp(o.covariates.dot(beta));
      deaths += o.status;
    }
    if (deaths > 0) {
      if (t <= 0.0) {
        throw InputError("EventAtTimeZero",
                         "events at time 0 cannot enter a baseline with positive jump times");
      }
      times.push_back(t);
      sizes.push_back(deaths / risk);
    }
  }
  std::reverse(times.begin(), times.end());
  std::reverse(sizes.begin(), sizes.end());
  return {std::move(times), std::move(sizes)};
}

std::vector<double> baseline_survival(const StepFunction& baseline) {
  std::vector<double> s0;
  s0.reserve(baseline.size());
  double s = 1.0;
  for (std::size_t k = 0; k < baseline.size(); ++k) {
    const double factor = 1.0 - baseline.jump_sizes()[k];
    if (factor < 0.0) {
      throw FactorOutOfRange("1 - dLambda0 = " + std::to_string(factor) + " at t = " +
                             std::to_string(baseline.jump_times()[k]));
    }
    s *= factor;
    s0.push_back(s);
  }
  return s0;
}

DiscreteSurvival survival_given_z(const StepFunction& baseline, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd& z, double tail_time) {
  if (beta.size() != z.size()) {
    throw InputError("DimensionMismatch", "beta and z differ in length");
  }
  if (!baseline.empty() && tail_time < baseline.jump_times().back()) {
    throw InputError("InvalidSurvival", "tail time precedes the last jump");
  }
  const double hazard_ratio = std::exp(beta.dot(z));
  const auto s0 = baseline_survival(baseline);

  std::vector<double> probs;
  probs.reserve(s0.size());
  double previous = 1.0;
  for (double base : s0) {
    const double s = std::pow(base, hazard_ratio);
    probs.push_back(previous - s);
    previous = s;
  }
  return {baseline.jump_times(), std::move(probs), tail_time, previous};
}

double default_tail_time(const Dataset& d, const StepFunction& baseline) {
  double tail = 0.0;
  for (const auto& o : d) tail = std::max(tail, o.time);
  if (!baseline.empty()) tail = std::max(tail, baseline.jump_times().back());
  return tail;
}

FittedModel fit_model(const Dataset& d, TieMethod ties, const FitOptions& opts) {
  FittedModel model;
  model.cox = fit(d, ties, opts);
  model.baseline = breslow_cumhaz(d, model.cox.beta_hat);
  model.ties = ties;
  model.tail_time = default_tail_time(d, model.baseline);
  return model;
}

}  // namespace survinfo
