#include "ccgame/gumbel.hpp"

#include <algorithm>
#include <cmath>

#include "ccgame/error.hpp"

namespace ccgame::gumbel {

namespace {

constexpr double kLowU = 1e-300;
constexpr double kHighU = 1.0 - 1e-16;

void require_noise(double beta) {
  if (!(beta > 0.0)) {
    throw InvalidInput(
        "Monte-Carlo estimation needs beta > 0; use the closed form at "
        "beta = 0");
  }
}

void require_samples(std::size_t samples, std::size_t minimum) {
  if (samples < minimum) {
    throw InvalidInput("need at least " + std::to_string(minimum) +
                       " samples, got " + std::to_string(samples));
  }
}

Estimate from_moments(double sum, double sum_sq, std::size_t count) {
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  double var = count > 1 ? (sum_sq - n * mean * mean) / (n - 1.0) : 0.0;
  if (var < 0.0) var = 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

GumbelSampler::GumbelSampler(double scale, std::uint64_t seed)
    : GumbelSampler(-scale * kEulerGamma, scale, seed) {}

GumbelSampler::GumbelSampler(double mu, double scale, std::uint64_t seed)
    : mu_(mu), scale_(scale), rng_(seed) {
  if (!(scale > 0.0)) throw InvalidInput("Gumbel scale must be positive");
}

double GumbelSampler::operator()() {
  const double u = std::clamp(rng_.uniform(), kLowU, kHighU);
  return mu_ - scale_ * std::log(-std::log(u));
}

double GumbelSampler::cdf(double x) const {
  return std::exp(-std::exp(-(x - mu_) / scale_));
}

MonteCarloSummary mc_summary(std::span<const double> scores, double beta,
                             const SamplingOptions& options) {
  require_noise(beta);
  if (scores.empty()) throw InvalidInput("no scores to sample over");
  require_samples(options.samples, 1);
  const std::size_t k = scores.size();
  GumbelSampler noise = options.mu ? GumbelSampler(*options.mu, beta, options.seed)
                                   : GumbelSampler(beta, options.seed);

  // Accumulate around the largest score to keep sums of squares well
  // conditioned.
  const double shift = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<std::size_t> hits(k, 0);
  std::vector<double> cond_sum(k, 0.0);
  std::vector<double> cond_sq(k, 0.0);
  for (std::size_t t = 0; t < options.samples; ++t) {
    std::size_t best = 0;
    double best_value = scores[0] + noise();
    for (std::size_t i = 1; i < k; ++i) {
      const double v = scores[i] + noise();
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    const double c = best_value - shift;
    sum += c;
    sum_sq += c * c;
    ++hits[best];
    cond_sum[best] += c;
    cond_sq[best] += c * c;
  }

  MonteCarloSummary out;
  out.samples = options.samples;
  out.utility = from_moments(sum, sum_sq, options.samples);
  out.utility.mean += shift;
  const double n = static_cast<double>(options.samples);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = static_cast<double>(hits[i]) / n;
    out.choice.push_back({p, std::sqrt(p * (1.0 - p) / n)});
    if (hits[i] == 0) {
      out.conditional.emplace_back(std::nullopt);
    } else {
      Estimate e = from_moments(cond_sum[i], cond_sq[i], hits[i]);
      e.mean += shift;
      out.conditional.emplace_back(e);
    }
  }
  return out;
}

Estimate mc_user_utility(std::span<const double> scores, double beta,
                         const SamplingOptions& options) {
  require_noise(beta);
  require_samples(options.samples, 10'000);
  return mc_summary(scores, beta, options).utility;
}

std::vector<Estimate> mc_choice_distribution(std::span<const double> scores,
                                             double beta,
                                             const SamplingOptions& options) {
  require_noise(beta);
  require_samples(options.samples, 10'000);
  return mc_summary(scores, beta, options).choice;
}

std::vector<std::optional<Estimate>> mc_conditional_engagement(
    std::span<const double> scores, double beta,
    const SamplingOptions& options) {
  require_noise(beta);
  require_samples(options.samples, 100'000);
  return mc_summary(scores, beta, options).conditional;
}

}  // namespace ccgame::gumbel
