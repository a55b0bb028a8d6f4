#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

#include "survinfo/dataset.hpp"

namespace survinfo {

enum class TieMethod { Efron, Breslow };

std::string_view to_string(TieMethod ties) noexcept;
// Accepts "efron" / "breslow" (case-insensitive). Throws InputError.
TieMethod parse_tie_method(std::string_view text);

struct ScoreInformation {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd neg_hessian;
};

// Everything one pass over the sorted risk sets produces.
struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd neg_hessian;
};

// Log partial likelihood. Subjects with time >= t are at risk at t, so
// censorings tied with a death stay in the risk set. Throws NoEvents if d has
// no event, InputError if beta has the wrong length.
double log_partial_likelihood(const Dataset& d, const Eigen::VectorXd& beta,
                              TieMethod ties = TieMethod::Efron);

ScoreInformation score_and_information(const Dataset& d, const Eigen::VectorXd& beta,
                                       TieMethod ties = TieMethod::Efron);

PartialLikelihood evaluate_partial_likelihood(const Dataset& d,
                                              const Eigen::VectorXd& beta,
                                              TieMethod ties = TieMethod::Efron);

struct FitOptions {
  int max_iter = 50;
  double tol = 1e-9;
  // Empty means the zero vector.
  Eigen::VectorXd null_beta;
  // |beta|_inf beyond this is taken as evidence of a monotone likelihood.
  double divergence_bound = 50.0;
  int max_halvings = 30;
};

struct CoxFit {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd var_hat;       // inverse of neg_hessian at beta_hat
  Eigen::MatrixXd neg_hessian;   // observed information at beta_hat
  Eigen::VectorXd gradient;      // score at beta_hat
  double loglik_at_beta_hat = 0.0;
  double loglik_at_null = 0.0;
  Eigen::VectorXd null_beta;
  int iterations = 0;
  bool converged = false;
  TieMethod ties = TieMethod::Efron;
};

// Maximum partial likelihood by damped Newton iteration from beta = 0.
// Throws MonotoneLikelihood, SingularInformation or NonConvergence.
CoxFit fit(const Dataset& d, TieMethod ties = TieMethod::Efron,
           const FitOptions& opts = {});

}  // namespace survinfo
