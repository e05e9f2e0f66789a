#pragma once

// Monte-Carlo estimators over explicit Gumbel draws. These never touch the
// closed forms in game.hpp and serve as the independent check on them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ccgame/rng.hpp"

namespace ccgame::gumbel {

inline constexpr double kEulerGamma = 0.57721566490153286061;

// Gumbel(mu, scale) via inverse CDF: x = mu - scale * log(-log U).
class GumbelSampler {
 public:
  // Zero-mean noise: mu = -scale * gamma.
  GumbelSampler(double scale, std::uint64_t seed);
  GumbelSampler(double mu, double scale, std::uint64_t seed);

  double operator()();
  double cdf(double x) const;

  double mu() const { return mu_; }
  double scale() const { return scale_; }

 private:
  double mu_;
  double scale_;
  Rng rng_;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct MonteCarloSummary {
  std::size_t samples = 0;
  // E[max_i (v_i + eps_i)]
  Estimate utility;
  // Empirical argmax frequencies, binomial standard errors.
  std::vector<Estimate> choice;
  // E[v_i + eps_i | i is the argmax]; empty when i was never chosen.
  std::vector<std::optional<Estimate>> conditional;
};

struct SamplingOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;
  // Noise location; defaults to the zero-mean choice -beta * gamma.
  std::optional<double> mu;
};

// One pass producing all three estimators from the same draws.
MonteCarloSummary mc_summary(std::span<const double> scores, double beta,
                             const SamplingOptions& options);

// Throw InvalidInput for beta <= 0 or fewer than 10^4 samples.
Estimate mc_user_utility(std::span<const double> scores, double beta,
                         const SamplingOptions& options);
std::vector<Estimate> mc_choice_distribution(std::span<const double> scores,
                                             double beta,
                                             const SamplingOptions& options);

// Needs at least 10^5 samples. Items never chosen are reported as
// insufficient support (std::nullopt).
std::vector<std::optional<Estimate>> mc_conditional_engagement(
    std::span<const double> scores, double beta,
    const SamplingOptions& options);

}  // namespace ccgame::gumbel
