#pragma once

#include <optional>

namespace ccgame::bounds {

// Smoothness constant c(beta, K) >= 1. Evaluated in log space with
// L = 1/beta so that any beta > 0 is safe; beta == 0 returns the limit 1.
double c_beta_k(double beta, int k);

// Upper bound on the price of anarchy, 1 + 1/c(beta, K).
double poa_upper(double beta, int k);

// Large-(beta, K) approximation 1 + 1/((1 + beta) log K). Infinite at K = 1.
double poa_upper_asymptotic(double beta, int k);

// (n-1)/n + 1/(1 + 5 beta log K): PoA attained by the lower-bound family.
double poa_lower(int n, double beta, int k);

// n -> infinity limit of poa_lower.
double poa_lower_asymptote(double beta, int k);

// Whether (n, beta, K) satisfies 0 <= beta <= 1, n > 2,
// 1 <= K <= min(n - 1, e^{1/(5 beta)}).
bool lower_bound_hypothesis_holds(int n, double beta, int k);

// 1 + (1 + n/(beta log K) * R/T) / c(beta, K). Throws InvalidInput when
// K < 2 or beta == 0 (beta log K vanishes).
double dynamic_poa_bound(int n, double beta, int k, double regret_rate);

// 1 / (1 + K log(K + b) / (K + b)), b = e^{1/beta} - 1. Tends to 1 as
// beta -> 0.
double welfare_loss_factor(double beta, int k);

struct BoundReport {
  double beta = 0.0;
  int k = 1;
  double c = 1.0;
  double poa_upper = 2.0;
  double poa_upper_asymptotic = 0.0;
  std::optional<double> poa_lower;  // needs n
  double poa_lower_asymptote = 0.0;
  std::optional<double> dynamic_upper;  // needs n, R/T, K >= 2, beta > 0
  double welfare_loss_factor = 0.0;
  // sum_i u_i(s*_i, s_-i) >= lambda W(s*) - mu W(s) with
  // lambda = mu = c, so that (1 + mu) / lambda = poa_upper.
  double smoothness_lambda = 1.0;
  double smoothness_mu = 1.0;
};

BoundReport report(double beta, int k, std::optional<int> n = std::nullopt,
                   std::optional<double> regret_rate = std::nullopt);

}  // namespace ccgame::bounds
