#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace survinfo {

// One subject: observed time, event indicator (1 = death, 0 = censored)
// and covariate vector.
struct Observation {
  double time = 0.0;
  int status = 0;
  Eigen::VectorXd covariates;

  bool event() const noexcept { return status == 1; }
  friend bool operator==(const Observation& a, const Observation& b) {
    return a.time == b.time && a.status == b.status &&
           a.covariates.size() == b.covariates.size() &&
           a.covariates == b.covariates;
  }
};

// Ordered, immutable collection of observations sharing covariate dimension
// p. Input order is preserved; fitting code sorts internally.
class Dataset {
 public:
  // Throws InputError if observations is empty or violates the per-row
  // invariants (time >= 0, status in {0,1}, covariate length == p).
  Dataset(std::vector<Observation> observations, std::size_t p,
          std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return obs_.size(); }
  std::size_t dim() const noexcept { return p_; }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  const std::vector<Observation>& observations() const noexcept { return obs_; }
  const std::vector<std::string>& covariate_names() const noexcept {
    return names_;
  }

  auto begin() const noexcept { return obs_.begin(); }
  auto end() const noexcept { return obs_.end(); }

  std::size_t events() const noexcept;
  bool fully_observed() const noexcept { return events() == size(); }

  // Same observations with every zero-time censored subject removed.
  Dataset without_zero_censored() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.p_ == b.p_ && a.obs_ == b.obs_;
  }

 private:
  std::vector<Observation> obs_;
  std::size_t p_;
  std::vector<std::string> names_;
};

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t events = 0;
  std::size_t censored = 0;
  double uncensored_fraction = 0.0;
};

DatasetSummary summary(const Dataset& d);

// CSV with header `time,status,z1,...,zp`. Errors carry the 1-based line.
Dataset parse_csv(std::istream& in);
Dataset parse_csv(std::string_view text);

// Writes the header and rows in the format accepted by parse_csv. Numbers
// use round-trip precision.
void write_csv(std::ostream& out, const Dataset& d);
std::string to_csv(const Dataset& d);

// Leukemia fixtures: "aml-orig", "aml-1", "aml-2".
Dataset fixture(std::string_view name);
const std::vector<std::string>& fixture_names();

}  // namespace survinfo
