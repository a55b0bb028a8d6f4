#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "survinfo/coxph.hpp"
#include "survinfo/dataset.hpp"

namespace survinfo {

enum class Measure {
  RI1,     // likelihood-ratio based
  RIW,     // Wald quadratic form with completed-data inverse variance
  RIWAlt,  // Wald form with completed-data observed information at its own maximum
  RIWKM,   // Kaplan-Meier survival at a fixed time, Greenwood variance
};

std::string_view to_string(Measure m) noexcept;
// "ri1", "riw", "riw-alt", "riw-km". Throws InputError.
Measure parse_measure(std::string_view text);

struct MeasureResult {
  Measure measure = Measure::RIW;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.99;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double numerator = 0.0;
  double denominator_mean = 0.0;
  double denominator_se = 0.0;
  // Replicates whose refit failed and were left out of the mean.
  std::size_t failures = 0;
  // Imputations that hit the degenerate tail case, summed over replicates.
  std::size_t degenerate_imputations = 0;
};

struct MeasureConfig {
  // Null value of beta; empty means zeros.
  Eigen::VectorXd beta0;
  // Coefficients under test for the Wald measures; empty means all. The
  // others are nuisance parameters handled through the variance sub-block.
  std::vector<std::size_t> tested;
  TieMethod ties = TieMethod::Efron;
  std::size_t reps = 5000;
  std::uint64_t seed = 42;
  double level = 0.99;
  // Worker threads for the replicates; 0 uses the hardware concurrency.
  // Results do not depend on it.
  unsigned threads = 0;
  FitOptions fit_options;
  // Largest fraction of replicates allowed to fail their refit.
  double max_failure_fraction = 0.01;
};

// Runs one set of completed-data replicates and evaluates every requested
// measure on it (RIWKM is not accepted here). Results follow the order of
// `which`.
std::vector<MeasureResult> evaluate_measures(const Dataset& d, std::span<const Measure> which,
                                             const MeasureConfig& config = {});

MeasureResult ri1(const Dataset& d, const MeasureConfig& config = {});
MeasureResult ri_w(const Dataset& d, const MeasureConfig& config = {});
MeasureResult ri_w_alt(const Dataset& d, const MeasureConfig& config = {});

struct KaplanMeierPoint {
  double survival = 1.0;
  double greenwood_variance = 0.0;
};

// Kaplan-Meier estimate at t and its Greenwood variance. Covariates are
// ignored.
KaplanMeierPoint kaplan_meier_at(const Dataset& d, double t);

struct KaplanMeierConfig {
  double t0 = 0.0;
  double s0_null = 0.5;
  std::size_t reps = 5000;
  std::uint64_t seed = 42;
  double level = 0.99;
  unsigned threads = 0;
  double max_failure_fraction = 0.01;
};

// Wald-ratio measure for theta = S(t0) of a single sample (p = 0), imputing
// censored times from the conditional Kaplan-Meier distribution.
MeasureResult ri_w_km(const Dataset& d, const KaplanMeierConfig& config);

nlohmann::ordered_json to_json(const MeasureResult& r);

// Two-sided standard normal quantile for a confidence level.
double normal_critical_value(double level);

}  // namespace survinfo
