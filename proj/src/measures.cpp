#include "survinfo/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>

#include "survinfo/baseline.hpp"
#include "survinfo/errors.hpp"
#include "survinfo/imputer.hpp"

namespace survinfo {

std::string_view to_string(Measure m) noexcept {
  switch (m) {
    case Measure::RI1: return "ri1";
    case Measure::RIW: return "riw";
    case Measure::RIWAlt: return "riw-alt";
    case Measure::RIWKM: return "riw-km";
  }
  return "unknown";
}

Measure parse_measure(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ri1") return Measure::RI1;
  if (lower == "riw") return Measure::RIW;
  if (lower == "riw-alt") return Measure::RIWAlt;
  if (lower == "riw-km") return Measure::RIWKM;
  throw InputError("UnknownMeasure", "unknown measure '" + std::string(text) + "'");
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InputError("InvalidLevel", "confidence level must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

namespace {

unsigned resolve_threads(unsigned requested, std::size_t work) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(work, 1)));
}

// Calls body(i) for i in [0, count). Each index is handled exactly once and
// writes only its own output slot, so scheduling does not affect results.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers = resolve_threads(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

// Running mean and variance, accumulated in replicate order.
struct Accumulator {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double standard_error() const {
    if (count < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

MeasureResult summarize(Measure measure, double numerator, const std::vector<double>& values,
                        const std::vector<char>& ok, std::size_t reps, std::uint64_t seed,
                        double level, std::size_t degenerate, double max_failure_fraction) {
  Accumulator acc;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (ok[r]) acc.add(values[r]);
  }
  MeasureResult out;
  out.measure = measure;
  out.level = level;
  out.reps = reps;
  out.seed = seed;
  out.numerator = numerator;
  out.failures = reps - acc.count;
  out.degenerate_imputations = degenerate;

  if (static_cast<double>(out.failures) > max_failure_fraction * static_cast<double>(reps) ||
      acc.count < 2) {
    throw ExcessiveRefitFailures(std::to_string(out.failures) + " of " + std::to_string(reps) +
                                 " replicates failed for " + std::string(to_string(measure)));
  }
  out.denominator_mean = acc.mean;
  out.denominator_se = acc.standard_error();

  const double z = normal_critical_value(level);
  const double lo = acc.mean - z * out.denominator_se;
  const double hi = acc.mean + z * out.denominator_se;
  if (lo <= 0.0 && hi >= 0.0) {
    throw DegenerateDenominator("denominator interval [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "] contains zero for " +
                                std::string(to_string(measure)));
  }
  out.estimate = numerator / acc.mean;
  const double a = numerator / hi;
  const double b = numerator / lo;
  out.ci_low = std::min(a, b);
  out.ci_high = std::max(a, b);
  return out;
}

void check_common(std::size_t reps, double level) {
  if (reps < 2) throw InputError("InvalidReps", "reps must be at least 2");
  normal_critical_value(level);
}

// Inverse of the tested sub-block of the variance. When every coefficient is
// tested this is the observed information itself.
Eigen::MatrixXd wald_information(const CoxFit& f, const std::vector<std::size_t>& tested) {
  const auto p = static_cast<std::size_t>(f.beta_hat.size());
  if (tested.size() == p) return f.neg_hessian;
  const auto k = static_cast<Eigen::Index>(tested.size());
  Eigen::MatrixXd block(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      block(a, b) = f.var_hat(static_cast<Eigen::Index>(tested[static_cast<std::size_t>(a)]),
                              static_cast<Eigen::Index>(tested[static_cast<std::size_t>(b)]));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success) {
    throw SingularInformation("variance sub-block is not positive definite");
  }
  return llt.solve(Eigen::MatrixXd::Identity(k, k));
}

Eigen::MatrixXd information_block(const CoxFit& f, const std::vector<std::size_t>& tested) {
  const auto k = static_cast<Eigen::Index>(tested.size());
  Eigen::MatrixXd block(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      block(a, b) = f.neg_hessian(static_cast<Eigen::Index>(tested[static_cast<std::size_t>(a)]),
                                  static_cast<Eigen::Index>(tested[static_cast<std::size_t>(b)]));
    }
  }
  return block;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) {
    out[static_cast<Eigen::Index>(a)] = v[static_cast<Eigen::Index>(idx[a])];
  }
  return out;
}

}  // namespace

std::vector<MeasureResult> evaluate_measures(const Dataset& d, std::span<const Measure> which,
                                             const MeasureConfig& config) {
  check_common(config.reps, config.level);
  const auto p = static_cast<Eigen::Index>(d.dim());

  bool want_ri1 = false;
  bool want_wald = false;
  for (auto m : which) {
    if (m == Measure::RIWKM) {
      throw InputError("UnsupportedMeasure", "riw-km is computed by ri_w_km");
    }
    (m == Measure::RI1 ? want_ri1 : want_wald) = true;
  }

  const Eigen::VectorXd beta0 = config.beta0.size() == 0 ? Eigen::VectorXd::Zero(p) : config.beta0;
  if (beta0.size() != p) throw InputError("DimensionMismatch", "beta0 has the wrong length");

  std::vector<std::size_t> tested = config.tested;
  if (tested.empty()) {
    for (std::size_t k = 0; k < d.dim(); ++k) tested.push_back(k);
  }
  std::sort(tested.begin(), tested.end());
  tested.erase(std::unique(tested.begin(), tested.end()), tested.end());
  if (tested.back() >= d.dim()) {
    throw InputError("InvalidTestedIndex", "tested coefficient index out of range");
  }

  FitOptions fit_opts = config.fit_options;
  fit_opts.null_beta = beta0;
  const FittedModel model = fit_model(d, config.ties, fit_opts);
  const Eigen::VectorXd& beta_hat = model.cox.beta_hat;
  const Eigen::VectorXd w = select(beta_hat, tested) - select(beta0, tested);

  const double num_ri1 = log_partial_likelihood(d, beta_hat, config.ties) -
                         log_partial_likelihood(d, beta0, config.ties);
  const double num_riw = w.dot(wald_information(model.cox, tested) * w);
  const double num_alt = w.dot(information_block(model.cox, tested) * w);

  const Imputer imputer(d, model);
  const std::size_t reps = config.reps;
  std::vector<double> q_ri1(reps), q_riw(reps), q_alt(reps);
  std::vector<char> ok_ri1(reps, 0), ok_wald(reps, 0);
  std::vector<std::size_t> degenerate(reps, 0);

  parallel_for(reps, config.threads, [&](std::size_t r) {
    const auto completion = imputer.complete(SeededRng(config.seed, r));
    const Dataset& co = completion.data;
    degenerate[r] = completion.degenerate.size();
    if (want_ri1) {
      q_ri1[r] = log_partial_likelihood(co, beta_hat, config.ties) -
                 log_partial_likelihood(co, beta0, config.ties);
      ok_ri1[r] = 1;
    }
    if (want_wald) {
      try {
        const CoxFit refit = fit(co, config.ties, fit_opts);
        q_riw[r] = w.dot(wald_information(refit, tested) * w);
        q_alt[r] = w.dot(information_block(refit, tested) * w);
        ok_wald[r] = 1;
      } catch (const NumericalError&) {
        ok_wald[r] = 0;
      }
    }
  });

  std::size_t degenerate_total = 0;
  for (auto n : degenerate) degenerate_total += n;

  std::vector<MeasureResult> results;
  for (auto m : which) {
    switch (m) {
      case Measure::RI1:
        results.push_back(summarize(m, num_ri1, q_ri1, ok_ri1, reps, config.seed, config.level,
                                    degenerate_total, config.max_failure_fraction));
        break;
      case Measure::RIW:
        results.push_back(summarize(m, num_riw, q_riw, ok_wald, reps, config.seed, config.level,
                                    degenerate_total, config.max_failure_fraction));
        break;
      case Measure::RIWAlt:
        results.push_back(summarize(m, num_alt, q_alt, ok_wald, reps, config.seed, config.level,
                                    degenerate_total, config.max_failure_fraction));
        break;
      case Measure::RIWKM:
        break;
    }
  }
  return results;
}

MeasureResult ri1(const Dataset& d, const MeasureConfig& config) {
  const Measure m[] = {Measure::RI1};
  return evaluate_measures(d, m, config).front();
}

MeasureResult ri_w(const Dataset& d, const MeasureConfig& config) {
  const Measure m[] = {Measure::RIW};
  return evaluate_measures(d, m, config).front();
}

MeasureResult ri_w_alt(const Dataset& d, const MeasureConfig& config) {
  const Measure m[] = {Measure::RIWAlt};
  return evaluate_measures(d, m, config).front();
}

KaplanMeierPoint kaplan_meier_at(const Dataset& d, double t) {
  std::vector<std::pair<double, int>> rows;
  rows.reserve(d.size());
  for (const auto& o : d) rows.emplace_back(o.time, o.status);
  std::sort(rows.begin(), rows.end());

  KaplanMeierPoint out;
  double greenwood_sum = 0.0;
  std::size_t at_risk = rows.size();
  std::size_t pos = 0;
  while (pos < rows.size() && rows[pos].first <= t) {
    const double time = rows[pos].first;
    std::size_t deaths = 0;
    std::size_t leaving = 0;
    for (; pos < rows.size() && rows[pos].first == time; ++pos) {
      deaths += static_cast<std::size_t>(rows[pos].second);
      ++leaving;
    }
    if (deaths > 0) {
      const auto n = static_cast<double>(at_risk);
      const auto dd = static_cast<double>(deaths);
      out.survival *= 1.0 - dd / n;
      greenwood_sum += deaths == at_risk ? std::numeric_limits<double>::infinity()
                                         : dd / (n * (n - dd));
    }
    at_risk -= leaving;
  }
  out.greenwood_variance =
      out.survival == 0.0 ? 0.0 : out.survival * out.survival * greenwood_sum;
  return out;
}

MeasureResult ri_w_km(const Dataset& d, const KaplanMeierConfig& config) {
  check_common(config.reps, config.level);
  if (d.dim() != 0) {
    throw InputError("UnexpectedCovariates", "the Kaplan-Meier measure takes a dataset without covariates");
  }
  double largest = 0.0;
  bool event_before = false;
  for (const auto& o : d) {
    largest = std::max(largest, o.time);
    if (o.event() && o.time <= config.t0) event_before = true;
  }
  if (!(config.t0 > 0.0) || config.t0 > largest) {
    throw InputError("InvalidTime", "t0 must be positive and no larger than the largest time");
  }
  if (!event_before) throw NoEvents("no event at or before t0");

  const auto observed = kaplan_meier_at(d, config.t0);
  if (!(observed.greenwood_variance > 0.0)) {
    throw DegenerateVariance("Kaplan-Meier estimate at t0 is " +
                             std::to_string(observed.survival) + " with zero variance");
  }
  const double w = observed.survival - config.s0_null;
  const double numerator = w * w / observed.greenwood_variance;

  FittedModel model;
  model.baseline = breslow_cumhaz(d, Eigen::VectorXd());
  model.cox.beta_hat = Eigen::VectorXd();
  model.tail_time = default_tail_time(d, model.baseline);
  const Imputer imputer(d, model);

  std::vector<double> q(config.reps);
  std::vector<char> ok(config.reps, 0);
  std::vector<std::size_t> degenerate(config.reps, 0);
  parallel_for(config.reps, config.threads, [&](std::size_t r) {
    const auto completion = imputer.complete(SeededRng(config.seed, r));
    degenerate[r] = completion.degenerate.size();
    const auto km = kaplan_meier_at(completion.data, config.t0);
    if (km.greenwood_variance > 0.0) {
      q[r] = w * w / km.greenwood_variance;
      ok[r] = 1;
    }
  });
  std::size_t degenerate_total = 0;
  for (auto n : degenerate) degenerate_total += n;

  try {
    return summarize(Measure::RIWKM, numerator, q, ok, config.reps, config.seed, config.level,
                     degenerate_total, config.max_failure_fraction);
  } catch (const ExcessiveRefitFailures& e) {
    throw DegenerateVariance(std::string("completed-data variance vanished too often: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const MeasureResult& r) {
  nlohmann::ordered_json j;
  j["measure"] = std::string(to_string(r.measure));
  j["estimate"] = r.estimate;
  j["ci"] = {r.ci_low, r.ci_high};
  j["level"] = r.level;
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["numerator"] = r.numerator;
  j["denominator_mean"] = r.denominator_mean;
  j["denominator_se"] = r.denominator_se;
  j["failures"] = r.failures;
  j["degenerate_imputations"] = r.degenerate_imputations;
  return j;
}

}  // namespace survinfo
