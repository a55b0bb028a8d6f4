#include "survinfo/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "survinfo/baseline.hpp"
#include "survinfo/coxph.hpp"
#include "survinfo/dataset.hpp"
#include "survinfo/errors.hpp"
#include "survinfo/imputer.hpp"
#include "survinfo/measures.hpp"

namespace survinfo::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

struct Options {
  std::string fixture;
  std::string data_path;
  std::string ties = "efron";
  std::string format = "json";
  std::string measure = "all";
  std::vector<double> null_beta;
  std::size_t reps = 5000;
  std::uint64_t seed = 42;
  double level = 0.99;
  unsigned threads = 0;
};

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Dataset load(const Options& o) {
  if (!o.fixture.empty()) return fixture(o.fixture);
  std::ifstream in(o.data_path);
  if (!in) throw InputError("UnreadableFile", "cannot open '" + o.data_path + "'");
  return parse_csv(in);
}

Eigen::VectorXd null_vector(const Options& o, const Dataset& d) {
  if (o.null_beta.empty()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.dim()));
  if (o.null_beta.size() != d.dim()) {
    throw InputError("DimensionMismatch", "--null-beta needs " + std::to_string(d.dim()) +
                                              " values");
  }
  return Eigen::Map<const Eigen::VectorXd>(o.null_beta.data(),
                                           static_cast<Eigen::Index>(o.null_beta.size()));
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  auto j = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v[k]);
  return j;
}

void cmd_fit(const Options& o, std::ostream& out) {
  const Dataset d = load(o);
  FitOptions opts;
  opts.null_beta = null_vector(o, d);
  const auto ties = parse_tie_method(o.ties);
  const CoxFit f = fit(d, ties, opts);
  const auto s = summary(d);

  if (o.format == "csv") {
    out << "coefficient,beta_hat,se,null_beta\n";
    for (Eigen::Index k = 0; k < f.beta_hat.size(); ++k) {
      out << d.covariate_names()[static_cast<std::size_t>(k)] << ',' << format_number(f.beta_hat[k])
          << ',' << format_number(std::sqrt(f.var_hat(k, k))) << ','
          << format_number(f.null_beta[k]) << '\n';
    }
    return;
  }
  ordered_json j;
  j["ties"] = std::string(to_string(ties));
  j["n"] = s.n;
  j["events"] = s.events;
  j["covariates"] = d.covariate_names();
  j["beta_hat"] = vector_json(f.beta_hat);
  auto var = ordered_json::array();
  for (Eigen::Index r = 0; r < f.var_hat.rows(); ++r) {
    var.push_back(vector_json(f.var_hat.row(r).transpose()));
  }
  j["var_hat"] = var;
  j["se"] = vector_json(f.var_hat.diagonal().cwiseSqrt());
  j["null_beta"] = vector_json(f.null_beta);
  j["loglik_at_beta_hat"] = f.loglik_at_beta_hat;
  j["loglik_at_null"] = f.loglik_at_null;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  out << j.dump(2) << '\n';
}

void cmd_baseline(const Options& o, std::ostream& out) {
  const Dataset d = load(o);
  const FittedModel model = fit_model(d, parse_tie_method(o.ties));
  const auto& times = model.baseline.jump_times();
  const auto& sizes = model.baseline.jump_sizes();
  const auto s0 = baseline_survival(model.baseline);

  if (o.format == "json") {
    ordered_json j;
    j["beta_hat"] = vector_json(model.cox.beta_hat);
    j["tail_time"] = model.tail_time;
    auto rows = ordered_json::array();
    double cum = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      cum += sizes[k];
      rows.push_back({{"time", times[k]}, {"dLambda", sizes[k]}, {"Lambda", cum}, {"S0", s0[k]}});
    }
    j["steps"] = rows;
    out << j.dump(2) << '\n';
    return;
  }
  out << "time,dLambda,Lambda,S0\n";
  double cum = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    cum += sizes[k];
    out << format_number(times[k]) << ',' << format_number(sizes[k]) << ','
        << format_number(cum) << ',' << format_number(s0[k]) << '\n';
  }
}

void cmd_impute(const Options& o, std::ostream& out) {
  const Dataset d = load(o);
  const FittedModel model = fit_model(d, parse_tie_method(o.ties));
  const auto completion = complete_dataset(d, model, SeededRng(o.seed, 0));
  write_csv(out, completion.data);
}

void cmd_export(const Options& o, std::ostream& out) { write_csv(out, load(o)); }

MeasureConfig measure_config(const Options& o, const Dataset& d) {
  MeasureConfig c;
  c.beta0 = null_vector(o, d);
  c.ties = parse_tie_method(o.ties);
  c.reps = o.reps;
  c.seed = o.seed;
  c.level = o.level;
  c.threads = o.threads;
  return c;
}

const char* kCsvHeader =
    "measure,estimate,ci_low,ci_high,level,reps,seed,numerator,denominator_mean,"
    "denominator_se,failures,degenerate_imputations\n";

void write_result_csv(std::ostream& out, const MeasureResult& r, const std::string& prefix = {}) {
  out << prefix << to_string(r.measure) << ',' << format_number(r.estimate) << ','
      << format_number(r.ci_low) << ',' << format_number(r.ci_high) << ','
      << format_number(r.level) << ',' << r.reps << ',' << r.seed << ','
      << format_number(r.numerator) << ',' << format_number(r.denominator_mean) << ','
      << format_number(r.denominator_se) << ',' << r.failures << ','
      << r.degenerate_imputations << '\n';
}

void cmd_measure(const Options& o, std::ostream& out) {
  const Dataset d = load(o);
  std::vector<Measure> which;
  if (o.measure == "all") {
    which = {Measure::RI1, Measure::RIW, Measure::RIWAlt};
  } else {
    which = {parse_measure(o.measure)};
    if (which.front() == Measure::RIWKM) {
      throw InputError("UnsupportedMeasure", "--measure must be one of ri1, riw, riw-alt, all");
    }
  }
  const auto results = evaluate_measures(d, which, measure_config(o, d));

  if (o.format == "csv") {
    out << kCsvHeader;
    for (const auto& r : results) write_result_csv(out, r);
    return;
  }
  if (results.size() == 1) {
    out << to_json(results.front()).dump(2) << '\n';
    return;
  }
  auto arr = ordered_json::array();
  for (const auto& r : results) arr.push_back(to_json(r));
  out << arr.dump(2) << '\n';
}

std::string cell(const MeasureResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%.3f, %.3f)", r.estimate, r.ci_low, r.ci_high);
  return buf;
}

void cmd_table2(const Options& o, std::ostream& out) {
  const Measure rows[] = {Measure::RI1, Measure::RIW};
  std::vector<std::pair<std::string, std::vector<MeasureResult>>> columns;
  for (const auto& name : fixture_names()) {
    const Dataset d = fixture(name);
    columns.emplace_back(name, evaluate_measures(d, rows, measure_config(o, d)));
  }

  if (o.format == "json") {
    ordered_json j;
    j["ties"] = o.ties;
    j["reps"] = o.reps;
    j["seed"] = o.seed;
    j["level"] = o.level;
    auto cols = ordered_json::object();
    for (const auto& [name, results] : columns) {
      auto col = ordered_json::object();
      for (const auto& r : results) col[std::string(to_string(r.measure))] = to_json(r);
      cols[name] = col;
    }
    j["fixtures"] = cols;
    out << j.dump(2) << '\n';
    return;
  }
  if (o.format == "csv") {
    out << "fixture," << kCsvHeader;
    for (const auto& [name, results] : columns) {
      for (const auto& r : results) write_result_csv(out, r, name + ",");
    }
    return;
  }

  std::ostringstream level;
  level << o.level * 100.0;
  out << "Relative information with " << level.str() << "% confidence intervals ("
      << o.reps << " replicates, seed " << o.seed << ", " << o.ties << " ties)\n\n";
  out << std::left << std::setw(8) << "";
  for (const auto& [name, results] : columns) out << std::setw(26) << name;
  out << '\n';
  for (std::size_t row = 0; row < std::size(rows); ++row) {
    out << std::setw(8) << (rows[row] == Measure::RI1 ? "RI_1" : "RI_W");
    for (const auto& [name, results] : columns) out << std::setw(26) << cell(results[row]);
    out << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fraction of information lost to censoring under the Cox model", "survinfo"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> fixtures = fixture_names();
  const auto add_input = [&](CLI::App* sub) {
    auto* fx = sub->add_option("--fixture", o.fixture, "Embedded dataset")
                   ->check(CLI::IsMember(fixtures));
    auto* data = sub->add_option("--data", o.data_path, "CSV file: time,status,z1,...,zp");
    fx->excludes(data);
    data->excludes(fx);
  };
  const auto add_ties = [&](CLI::App* sub) {
    sub->add_option("--ties", o.ties, "Tie correction")
        ->transform(CLI::IsMember({"efron", "breslow"}, CLI::ignore_case))
        ->capture_default_str();
  };
  const auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--reps", o.reps, "Monte Carlo replicates")
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--level", o.level, "Confidence level")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
  };
  const auto add_null = [&](CLI::App* sub) {
    sub->add_option("--null-beta", o.null_beta, "Null coefficient vector (default zeros)")
        ->delimiter(',');
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit the Cox model by maximum partial likelihood");
  add_input(fit_cmd);
  add_ties(fit_cmd);
  add_null(fit_cmd);

  auto* base_cmd = app.add_subcommand("baseline", "Breslow baseline cumulative hazard as CSV");
  add_input(base_cmd);
  add_ties(base_cmd);

  auto* imp_cmd = app.add_subcommand("impute", "Write one completed dataset as CSV");
  add_input(imp_cmd);
  add_ties(imp_cmd);
  imp_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();

  auto* meas_cmd = app.add_subcommand("measure", "Monte Carlo relative-information measures");
  add_input(meas_cmd);
  add_ties(meas_cmd);
  add_null(meas_cmd);
  add_mc(meas_cmd);
  meas_cmd->add_option("--measure", o.measure, "ri1 | riw | riw-alt | all")
      ->check(CLI::IsMember({"ri1", "riw", "riw-alt", "all"}))
      ->capture_default_str();

  auto* t2_cmd = app.add_subcommand("table2", "RI_1 and RI_W on the three leukemia datasets");
  add_ties(t2_cmd);
  add_mc(t2_cmd);

  auto* exp_cmd = app.add_subcommand("export", "Write an embedded dataset as CSV");
  exp_cmd->add_option("--fixture", o.fixture, "Embedded dataset")
      ->required()
      ->check(CLI::IsMember(fixtures));

  // Per-command format defaults.
  fit_cmd->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  base_cmd->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"json", "csv"}));
  meas_cmd->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  t2_cmd->add_option("--format", o.format, "text | json | csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  const auto needs_input = [&](CLI::App* sub) {
    if (sub->parsed() && o.fixture.empty() && o.data_path.empty()) {
      err << "error: one of --fixture or --data is required\n";
      return true;
    }
    return false;
  };
  for (auto* sub : {fit_cmd, base_cmd, imp_cmd, meas_cmd}) {
    if (needs_input(sub)) return kUsageError;
  }
  if (base_cmd->parsed() && base_cmd->count("--format") == 0) o.format = "csv";
  if (t2_cmd->parsed() && t2_cmd->count("--format") == 0) o.format = "text";

  try {
    if (fit_cmd->parsed()) cmd_fit(o, out);
    else if (base_cmd->parsed()) cmd_baseline(o, out);
    else if (imp_cmd->parsed()) cmd_impute(o, out);
    else if (meas_cmd->parsed()) cmd_measure(o, out);
    else if (t2_cmd->parsed()) cmd_table2(o, out);
    else if (exp_cmd->parsed()) cmd_export(o, out);
  } catch (const NumericalError& e) {
    err << e.name() << ": " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    err << e.name() << ": " << e.what() << '\n';
    return kUsageError;
  }
  return kOk;
}

}  // namespace survinfo::cli
