#include "survinfo/imputer.hpp"

#include <algorithm>

namespace survinfo {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), engine_(make_engine(seed, stream_id)) {}

SeededRng SeededRng::derive(std::uint64_t index) const {
  return SeededRng(seed_, splitmix64(stream_ ^ splitmix64(index)));
}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

Draw conditional_sample(const DiscreteSurvival& s, double t_cens, SeededRng& rng) {
  const auto& times = s.atom_times();
  const auto& probs = s.atom_probs();
  const auto first =
      static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t_cens) - times.begin());

  const bool tail_beyond = s.tail_time() > t_cens;
  double remaining = tail_beyond ? s.tail_prob() : 0.0;
  for (std::size_t k = first; k < times.size(); ++k) remaining += probs[k];

  if (!tail_beyond || !(remaining > 0.0)) {
    return {std::max(t_cens, s.tail_time()), true};
  }

  const double target = rng.uniform() * remaining;
  double cumulative = 0.0;
  for (std::size_t k = first; k < times.size(); ++k) {
    cumulative += probs[k];
    if (target < cumulative) return {times[k], false};
  }
  return {s.tail_time(), false};
}

Imputer::Imputer(const Dataset& d, const FittedModel& model) : data_(d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].event()) continue;
    censored_.push_back(i);
    survival_.push_back(survival_given_z(model.baseline, model.cox.beta_hat, d[i].covariates,
                                         model.tail_time));
  }
}

Completion Imputer::complete(const SeededRng& rng) const {
  std::vector<Observation> obs = data_.observations();
  std::vector<std::size_t> degenerate;
  for (std::size_t k = 0; k < censored_.size(); ++k) {
    const std::size_t i = censored_[k];
    auto stream = rng.derive(i);
    const auto draw = conditional_sample(survival_[k], obs[i].time, stream);
    obs[i].time = draw.time;
    obs[i].status = 1;
    if (draw.degenerate) degenerate.push_back(i);
  }
  return {Dataset(std::move(obs), data_.dim(), data_.covariate_names()),
          std::move(degenerate)};
}

Completion complete_dataset(const Dataset& d, const FittedModel& model, const SeededRng& rng) {
  return Imputer(d, model).complete(rng);
}

}  // namespace survinfo
