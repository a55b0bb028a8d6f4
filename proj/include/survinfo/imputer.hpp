#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "survinfo/baseline.hpp"
#include "survinfo/dataset.hpp"

namespace survinfo {

// Reproducible random stream identified by (seed, stream_id). The engine and
// the uniform conversion are fully specified, so output is identical across
// platforms and standard libraries.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  // Independent child stream; the same (parent, index) always gives the same
  // child.
  SeededRng derive(std::uint64_t index) const;

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

struct Draw {
  double time = 0.0;
  // Set when no survival mass lies beyond the conditioning time and the
  // returned value is max(t_cens, tail_time).
  bool degenerate = false;
};

// Draws X from s conditional on X > t_cens.
Draw conditional_sample(const DiscreteSurvival& s, double t_cens, SeededRng& rng);

struct Completion {
  Dataset data;
  // Indices of subjects whose imputation hit the degenerate tail case.
  std::vector<std::size_t> degenerate;
};

// Precomputes the fitted survival distribution of every censored subject so
// repeated completions only pay for the draws.
class Imputer {
 public:
  Imputer(const Dataset& d, const FittedModel& model);

  // Each censored subject i uses stream rng.derive(i).
  Completion complete(const SeededRng& rng) const;

  std::size_t censored_count() const noexcept { return censored_.size(); }

 private:
  Dataset data_;
  std::vector<std::size_t> censored_;
  std::vector<DiscreteSurvival> survival_;
};

Completion complete_dataset(const Dataset& d, const FittedModel& model, const SeededRng& rng);

}  // namespace survinfo
