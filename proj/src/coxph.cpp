#include "survinfo/coxph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>

#include "survinfo/errors.hpp"

namespace survinfo {

std::string_view to_string(TieMethod ties) noexcept {
  return ties == TieMethod::Efron ? "efron" : "breslow";
}

TieMethod parse_tie_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "efron") return TieMethod::Efron;
  if (lower == "breslow") return TieMethod::Breslow;
  throw InputError("UnknownTieMethod", "unknown tie method '" + std::string(text) + "'");
}

namespace {

void check_inputs(const Dataset& d, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != d.dim()) {
    throw InputError("DimensionMismatch",
                     "beta has length " + std::to_string(beta.size()) +
                         " but the dataset has p = " + std::to_string(d.dim()));
  }
  if (d.events() == 0) throw NoEvents("dataset has no observed events");
}

// Indices ordered by decreasing time; ties keep input order.
std::vector<std::size_t> descending_time_order(const Dataset& d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d[a].time > d[b].time;
  });
  return order;
}

}  // namespace

PartialLikelihood evaluate_partial_likelihood(const Dataset& d,
                                              const Eigen::VectorXd& beta,
                                              TieMethod ties) {
  check_inputs(d, beta);
  const auto p = static_cast<Eigen::Index>(d.dim());
  const auto order = descending_time_order(d);

  double earliest_event = std::numeric_limits<double>::infinity();
  for (const auto& o : d) {
    if (o.event()) earliest_event = std::min(earliest_event, o.time);
  }

  // Subjects below the earliest event time never enter a risk set; keeping
  // them out of the offset makes appending them a no-op.
  std::vector<double> eta(d.size());
  double offset = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    eta[i] = d[i].covariates.dot(beta);
    if (d[i].time >= earliest_event) offset = std::max(offset, eta[i]);
  }

  PartialLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.neg_hessian = Eigen::MatrixXd::Zero(p, p);

  double risk0 = 0.0;
  Eigen::VectorXd risk1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd risk2 = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd a1(p);
  Eigen::MatrixXd a2(p, p);

  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = d[order[pos]].time;
    if (t < earliest_event) break;

    double tied0 = 0.0;
    Eigen::VectorXd tied1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd tied2 = Eigen::MatrixXd::Zero(p, p);
    int deaths = 0;

    std::size_t end = pos;
    for (; end < order.size() && d[order[end]].time == t; ++end) {
      const std::size_t i = order[end];
      const auto& z = d[i].covariates;
      const double w = std::exp(eta[i] - offset);
      risk0 += w;
      risk1.noalias() += w * z;
      risk2.noalias() += w * z * z.transpose();
      if (d[i].event()) {
        ++deaths;
        tied0 += w;
        tied1.noalias() += w * z;
        tied2.noalias() += w * z * z.transpose();
        out.loglik += eta[i];
        out.gradient += z;
      }
    }
    pos = end;

    for (int k = 0; k < deaths; ++k) {
      const double frac =
          ties == TieMethod::Efron ? static_cast<double>(k) / deaths : 0.0;
      const double a0 = risk0 - frac * tied0;
      a1 = risk1 - frac * tied1;
      a2 = risk2 - frac * tied2;
      out.loglik -= std::log(a0) + offset;
      out.gradient -= a1 / a0;
      out.neg_hessian += a2 / a0 - (a1 / a0) * (a1 / a0).transpose();
    }
  }
  return out;
}

double log_partial_likelihood(const Dataset& d, const Eigen::VectorXd& beta,
                              TieMethod ties) {
  return evaluate_partial_likelihood(d, beta, ties).loglik;
}

ScoreInformation score_and_information(const Dataset& d, const Eigen::VectorXd& beta,
                                       TieMethod ties) {
  auto pl = evaluate_partial_likelihood(d, beta, ties);
  return {std::move(pl.gradient), std::move(pl.neg_hessian)};
}

namespace {

// Consecutive iterations with a negligible score but a non-negligible Newton
// step before the likelihood is declared flat in some direction.
constexpr int kFlatIterationsForMonotone = 3;

Eigen::VectorXd newton_step(const Eigen::MatrixXd& neg_hessian,
                            const Eigen::VectorXd& gradient) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hessian);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    throw SingularInformation("observed information is not positive definite");
  }
  return ldlt.solve(gradient);
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& neg_hessian) {
  const auto p = neg_hessian.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(neg_hessian);
  if (llt.info() != Eigen::Success) {
    throw SingularInformation("observed information is not positive definite at the maximum");
  }
  const double rcond = llt.rcond();
  if (!(rcond > 1e-14)) {
    throw SingularInformation("observed information is numerically singular (rcond " +
                              std::to_string(rcond) + ")");
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  return (inv + inv.transpose()) / 2.0;
}

}  // namespace

CoxFit fit(const Dataset& d, TieMethod ties, const FitOptions& opts) {
  const auto p = static_cast<Eigen::Index>(d.dim());
  if (p == 0) throw InputError("NoCovariates", "fit requires at least one covariate");
  if (d.events() == 0) throw NoEvents("dataset has no observed events");

  CoxFit result;
  result.ties = ties;
  result.null_beta = opts.null_beta.size() == 0 ? Eigen::VectorXd::Zero(p) : opts.null_beta;
  if (result.null_beta.size() != p) {
    throw InputError("DimensionMismatch", "null beta has the wrong length");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto current = evaluate_partial_likelihood(d, beta, ties);
  int flat_iterations = 0;

  for (int iter = 0;; ++iter) {
    const double score_norm = current.gradient.lpNorm<Eigen::Infinity>();
    const bool score_small = score_norm <= opts.tol * (1.0 + std::abs(current.loglik));
    const double beta_norm = beta.lpNorm<Eigen::Infinity>();

    Eigen::VectorXd step;
    if (score_norm == 0.0) {
      step = Eigen::VectorXd::Zero(p);
    } else {
      step = newton_step(current.neg_hessian, current.gradient);
    }
    const bool step_small =
        step.lpNorm<Eigen::Infinity>() <= std::sqrt(opts.tol) * (1.0 + beta_norm);

    if (score_small && step_small) {
      result.iterations = iter;
      result.converged = true;
      break;
    }
    if (score_small) {
      if (++flat_iterations >= kFlatIterationsForMonotone) {
        throw MonotoneLikelihood("partial likelihood is flat along the iteration path at |beta| = " +
                                 std::to_string(beta_norm) + "; no finite maximum");
      }
    } else {
      flat_iterations = 0;
    }
    if (iter >= opts.max_iter) {
      throw NonConvergence("Newton iteration did not converge in " +
                           std::to_string(opts.max_iter) + " iterations");
    }

    const double floor = current.loglik - 1e-12 * (1.0 + std::abs(current.loglik));
    Eigen::VectorXd candidate = beta + step;
    auto next = evaluate_partial_likelihood(d, candidate, ties);
    for (int h = 0; !(next.loglik >= floor); ++h) {
      if (h >= opts.max_halvings) {
        throw NonConvergence("step halving failed to increase the partial likelihood");
      }
      step /= 2.0;
      candidate = beta + step;
      next = evaluate_partial_likelihood(d, candidate, ties);
    }
    beta = std::move(candidate);
    current = std::move(next);

    if (beta.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
      throw MonotoneLikelihood("|beta| exceeded " + std::to_string(opts.divergence_bound) +
                               "; the partial likelihood appears monotone");
    }
  }

  result.beta_hat = beta;
  result.loglik_at_beta_hat = current.loglik;
  result.gradient = current.gradient;
  result.neg_hessian = current.neg_hessian;
  result.var_hat = invert_information(current.neg_hessian);
  result.loglik_at_null = log_partial_likelihood(d, result.null_beta, ties);
  return result;
}

}  // namespace survinfo
