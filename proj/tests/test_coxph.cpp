#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "survinfo/coxph.hpp"
#include "survinfo/errors.hpp"

using namespace survinfo;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

Dataset two_covariate_data(std::uint64_t seed, int n) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> ex(1.0);
  std::normal_distribution<double> nz(0.0, 1.0);
  std::bernoulli_distribution cens(0.3);
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(2);
    z << nz(gen), (i % 2);
    obs.push_back({std::round(ex(gen) * 10.0) / 2.0 + 0.5, cens(gen) ? 0 : 1, z});
  }
  return Dataset(std::move(obs), 2);
}

}  // namespace

TEST_SUITE("coxph") {

TEST_CASE("three distinct uncensored times at beta = 0 give -log 6") {
  const auto d = parse_csv("time,status,z1\n1,1,0.3\n2,1,-1\n3,1,4");
  CHECK(log_partial_likelihood(d, vec1(0.0)) == doctest::Approx(-std::log(6.0)).epsilon(1e-14));
  CHECK(log_partial_likelihood(d, vec1(0.0), TieMethod::Breslow) ==
        doctest::Approx(-1.791759).epsilon(1e-6));
}

TEST_CASE("aml-orig at beta = 0 matches the enumeration oracle") {
  const auto d = fixture("aml-orig");
  const double efron = log_partial_likelihood(d, vec1(0.0), TieMethod::Efron);
  const double breslow = log_partial_likelihood(d, vec1(0.0), TieMethod::Breslow);
  CHECK(efron == doctest::Approx(oracle::log_partial_likelihood(d, vec1(0.0), true)).epsilon(1e-13));
  CHECK(breslow ==
        doctest::Approx(oracle::log_partial_likelihood(d, vec1(0.0), false)).epsilon(1e-13));
  // Frozen from the standalone oracle.
  CHECK(efron == doctest::Approx(-42.7248392627602).epsilon(1e-12));
  CHECK(breslow == doctest::Approx(-42.898123897174).epsilon(1e-12));
}

TEST_CASE("log likelihood agrees with the oracle for several beta and p = 2") {
  const auto d = two_covariate_data(3, 60);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd b(2);
    b << u(gen), u(gen);
    for (bool efron : {true, false}) {
      const auto ties = efron ? TieMethod::Efron : TieMethod::Breslow;
      CHECK(log_partial_likelihood(d, b, ties) ==
            doctest::Approx(oracle::log_partial_likelihood(d, b, efron)).epsilon(1e-12));
    }
  }
}

TEST_CASE("time-zero censored subjects never enter a risk set") {
  const auto orig = fixture("aml-orig");
  const auto padded = fixture("aml-2");
  for (double b : {-3.0, -0.5, 0.0, 0.7, 0.9155, 2.5}) {
    for (auto ties : {TieMethod::Efron, TieMethod::Breslow}) {
      CHECK(log_partial_likelihood(padded, vec1(b), ties) ==
            log_partial_likelihood(orig, vec1(b), ties));
      const auto a = score_and_information(padded, vec1(b), ties);
      const auto c = score_and_information(orig, vec1(b), ties);
      CHECK(a.gradient == c.gradient);
      CHECK(a.neg_hessian == c.neg_hessian);
    }
  }
}

TEST_CASE("appending zero-time censored rows anywhere is bitwise neutral") {
  const auto base = two_covariate_data(5, 40);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nz(0.0, 5.0);
  auto obs = base.observations();
  for (int k = 0; k < 15; ++k) {
    Eigen::VectorXd z(2);
    z << nz(gen), nz(gen);
    const auto at = std::uniform_int_distribution<std::size_t>(0, obs.size())(gen);
    obs.insert(obs.begin() + static_cast<std::ptrdiff_t>(at), Observation{0.0, 0, z});
  }
  const Dataset padded(obs, 2);
  Eigen::VectorXd b(2);
  b << 0.4, -0.8;
  CHECK(log_partial_likelihood(padded, b) == log_partial_likelihood(base, b));
  CHECK(score_and_information(padded, b).gradient == score_and_information(base, b).gradient);
  const auto f1 = fit(padded);
  const auto f2 = fit(base);
  CHECK(f1.beta_hat == f2.beta_hat);
  CHECK(f1.var_hat == f2.var_hat);
  CHECK(f1.loglik_at_beta_hat == f2.loglik_at_beta_hat);
}

TEST_CASE("identical covariates give zero score and information") {
  const auto d = parse_csv("time,status,z1\n1,1,2\n2,0,2\n3,1,2\n3,1,2\n5,1,2");
  for (double b : {-1.0, 0.0, 3.0}) {
    const auto si = score_and_information(d, vec1(b));
    CHECK(std::abs(si.gradient[0]) < 1e-12);
    CHECK(std::abs(si.neg_hessian(0, 0)) < 1e-12);
  }
  CHECK_THROWS_AS(fit(d), SingularInformation);
}

TEST_CASE("score and information match finite differences") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Dataset> sets;
  for (const auto& name : fixture_names()) sets.push_back(fixture(name));
  sets.push_back(two_covariate_data(17, 50));
  for (const auto& d : sets) {
    for (auto ties : {TieMethod::Efron, TieMethod::Breslow}) {
      for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd b(static_cast<Eigen::Index>(d.dim()));
        for (auto& x : b) x = u(gen);
        const auto si = score_and_information(d, b, ties);
        const auto fd = oracle::central_gradient(
            [&](const Eigen::VectorXd& x) { return log_partial_likelihood(d, x, ties); }, b, 1e-5);
        CHECK(rel_err(si.gradient, fd) <= 1e-6);

        Eigen::MatrixXd fd_hess(b.size(), b.size());
        for (Eigen::Index k = 0; k < b.size(); ++k) {
          fd_hess.col(k) = -oracle::central_gradient(
              [&](const Eigen::VectorXd& x) {
                return score_and_information(d, x, ties).gradient[k];
              },
              b, 1e-5);
        }
        CHECK(rel_err(si.neg_hessian, fd_hess) <= 1e-5);
        CHECK((si.neg_hessian - si.neg_hessian.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("fit on aml-orig matches the bisection oracle") {
  const auto d = fixture("aml-orig");
  for (bool efron : {true, false}) {
    const auto f = fit(d, efron ? TieMethod::Efron : TieMethod::Breslow);
    const double root =
        oracle::bisect([&](double b) { return oracle::score_1d(d, b, efron); }, -10.0, 10.0);
    CHECK(f.converged);
    CHECK(std::abs(f.beta_hat[0] - root) <= 1e-6);
    CHECK(f.beta_hat[0] == doctest::Approx(efron ? 0.915532575014773 : 0.904219723686211)
                               .epsilon(1e-9));
    CHECK(f.var_hat(0, 0) * f.neg_hessian(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.loglik_at_beta_hat >= f.loglik_at_null);
    CHECK(f.loglik_at_null == log_partial_likelihood(d, vec1(0.0), f.ties));
  }
  // Observed information at the maximum, frozen from the standalone oracle.
  CHECK(fit(d).neg_hessian(0, 0) == doctest::Approx(3.81567683049565).epsilon(1e-9));
}

TEST_CASE("fit meets its gradient tolerance and beats random beta") {
  const auto d2 = two_covariate_data(23, 80);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-5.0 / std::sqrt(2.0), 5.0 / std::sqrt(2.0));
  for (const auto* d : {&d2}) {
    const auto f = fit(*d);
    CHECK(f.gradient.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + std::abs(f.loglik_at_beta_hat)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.var_hat);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd b(2);
      b << u(gen), u(gen);
      CHECK(f.loglik_at_beta_hat >= log_partial_likelihood(*d, b) - 1e-10);
    }
  }
}

TEST_CASE("symmetric groups give beta_hat = 0") {
  const auto d = parse_csv(
      "time,status,z1\n2,1,0\n4,0,0\n5,1,0\n9,1,0\n2,1,1\n4,0,1\n5,1,1\n9,1,1");
  const auto f = fit(d);
  CHECK(std::abs(f.beta_hat[0]) < 1e-9);
  CHECK(f.iterations == 0);
}

TEST_CASE("separated data has no finite maximum") {
  const auto d = parse_csv("time,status,z1\n1,1,1\n2,1,0");
  CHECK_THROWS_AS(fit(d), MonotoneLikelihood);
  CHECK_THROWS_AS(fit(d, TieMethod::Breslow), MonotoneLikelihood);
}

TEST_CASE("iteration budget and missing events are reported") {
  FitOptions opts;
  opts.max_iter = 1;
  CHECK_THROWS_AS(fit(fixture("aml-orig"), TieMethod::Efron, opts), NonConvergence);
  const auto none = parse_csv("time,status,z1\n1,0,0\n2,0,1");
  CHECK_THROWS_AS(fit(none), NoEvents);
  CHECK_THROWS_AS(log_partial_likelihood(none, vec1(0.0)), NoEvents);
  CHECK_THROWS_AS(log_partial_likelihood(fixture("aml-orig"), Eigen::VectorXd::Zero(2)),
                  InputError);
}

TEST_CASE("partial likelihood is concave along random chords") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-4.0, 4.0), lam(0.0, 1.0);
  for (const auto& name : fixture_names()) {
    const auto d = fixture(name);
    for (auto ties : {TieMethod::Efron, TieMethod::Breslow}) {
      for (int trial = 0; trial < 50; ++trial) {
        const double b1 = u(gen), b2 = u(gen), l = lam(gen);
        const double mid = log_partial_likelihood(d, vec1(l * b1 + (1 - l) * b2), ties);
        const double chord = l * log_partial_likelihood(d, vec1(b1), ties) +
                             (1 - l) * log_partial_likelihood(d, vec1(b2), ties);
        CHECK(mid >= chord - 1e-10);
      }
    }
  }
}

TEST_CASE("shifting a covariate leaves beta_hat and likelihood differences unchanged") {
  const auto d = fixture("aml-orig");
  auto obs = d.observations();
  for (auto& o : obs) o.covariates[0] += 3.25;
  const Dataset shifted(obs, 1);
  CHECK(std::abs(fit(shifted).beta_hat[0] - fit(d).beta_hat[0]) <= 1e-8);
  for (double b : {-1.0, 0.3, 2.0}) {
    const double a = log_partial_likelihood(d, vec1(b)) - log_partial_likelihood(d, vec1(0.5));
    const double s =
        log_partial_likelihood(shifted, vec1(b)) - log_partial_likelihood(shifted, vec1(0.5));
    CHECK(std::abs(a - s) <= 1e-10);
  }
}

TEST_CASE("tie method names") {
  CHECK(parse_tie_method("Efron") == TieMethod::Efron);
  CHECK(parse_tie_method("breslow") == TieMethod::Breslow);
  CHECK_THROWS_AS(parse_tie_method("exact"), InputError);
  CHECK(to_string(TieMethod::Breslow) == "breslow");
}

}
