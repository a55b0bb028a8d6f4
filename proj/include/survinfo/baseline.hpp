#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "survinfo/coxph.hpp"
#include "survinfo/dataset.hpp"

namespace survinfo {

// Right-continuous cumulative hazard with jumps at strictly increasing
// positive times.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> jump_times, std::vector<double> jump_sizes);

  const std::vector<double>& jump_times() const noexcept { return times_; }
  const std::vector<double>& jump_sizes() const noexcept { return sizes_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

  // Sum of the jumps at times <= t.
  double operator()(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> sizes_;
};

// Atomic survival distribution: mass on each atom time plus one tail atom
// carrying whatever survival remains after the last atom.
class DiscreteSurvival {
 public:
  DiscreteSurvival(std::vector<double> atom_times, std::vector<double> atom_probs,
                   double tail_time, double tail_prob);

  const std::vector<double>& atom_times() const noexcept { return times_; }
  const std::vector<double>& atom_probs() const noexcept { return probs_; }
  double tail_time() const noexcept { return tail_time_; }
  double tail_prob() const noexcept { return tail_prob_; }

  // P(X > t).
  double survival(double t) const;
  double total_mass() const;

 private:
  std::vector<double> times_;
  std::vector<double> probs_;
  double tail_time_;
  double tail_prob_;
};

struct FittedModel {
  CoxFit cox;
  StepFunction baseline;
  TieMethod ties = TieMethod::Efron;
  // Where the residual survival mass is placed when imputing.
  double tail_time = 0.0;
};

// Breslow estimate of the baseline cumulative hazard: one jump per distinct
// event time t of size d(t) / sum_{T_j >= t} exp(beta'Z_j). With beta = 0 or
// p = 0 this is the Nelson-Aalen estimator.
StepFunction breslow_cumhaz(const Dataset& d, const Eigen::VectorXd& beta);

// S(t|z) = prod_{s<=t}(1 - dLambda0(s)) ^ exp(beta'z), as atoms at the jump
// times plus a tail atom at tail_time holding S(last jump|z). Throws
// FactorOutOfRange if some 1 - dLambda0 is negative.
DiscreteSurvival survival_given_z(const StepFunction& baseline, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd& z, double tail_time);

// Baseline survival S0 at each jump time of the baseline.
std::vector<double> baseline_survival(const StepFunction& baseline);

// max(largest observed time, last jump time).
double default_tail_time(const Dataset& d, const StepFunction& baseline);

// Fits the Cox model and the baseline hazard at beta_hat.
FittedModel fit_model(const Dataset& d, TieMethod ties = TieMethod::Efron,
                      const FitOptions& opts = {});

}  // namespace survinfo
