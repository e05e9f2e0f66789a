#include "ccgame/bounds.hpp"

#include <cmath>
#include <limits>

#include "ccgame/error.hpp"

namespace ccgame::bounds {

namespace {

void check_args(double beta, int k) {
  if (!(beta >= 0.0)) throw InvalidInput("beta must be nonnegative");
  if (k < 1) throw InvalidInput("K must be at least 1");
}

// log(b + K) with b = e^L - 1, as L + log1p((K-1) e^{-L}).
double log_b_plus_k(double inv_beta, int k) {
  return inv_beta + std::log1p((k - 1) * std::exp(-inv_beta));
}

}  // namespace

double c_beta_k(double beta, int k) {
  check_args(beta, k);
  if (k == 1 || beta == 0.0) return 1.0;
  const double inv_beta = 1.0 / beta;
  const double lbk = log_b_plus_k(inv_beta, k);
  const double ratio = 1.0 + (k - 1) * std::exp(-inv_beta);  // (b+K)/(b+1)
  return lbk / (ratio * (lbk - std::log(static_cast<double>(k))));
}

double poa_upper(double beta, int k) { return 1.0 + 1.0 / c_beta_k(beta, k); }

double poa_upper_asymptotic(double beta, int k) {
  check_args(beta, k);
  if (k == 1) return std::numeric_limits<double>::infinity();
  return 1.0 + 1.0 / ((1.0 + beta) * std::log(static_cast<double>(k)));
}

double poa_lower(int n, double beta, int k) {
  check_args(beta, k);
  if (n < 1) throw InvalidInput("n must be positive");
  return static_cast<double>(n - 1) / n +
         1.0 / (1.0 + 5.0 * beta * std::log(static_cast<double>(k)));
}

double poa_lower_asymptote(double beta, int k) {
  check_args(beta, k);
  return 1.0 + 1.0 / (1.0 + 5.0 * beta * std::log(static_cast<double>(k)));
}

bool lower_bound_hypothesis_holds(int n, double beta, int k) {
  if (!(beta >= 0.0 && beta <= 1.0) || n <= 2 || k < 1 || k > n - 1) {
    return false;
  }
  if (beta == 0.0) return true;
  return std::log(static_cast<double>(k)) <= 1.0 / (5.0 * beta);
}

double dynamic_poa_bound(int n, double beta, int k, double regret_rate) {
  check_args(beta, k);
  if (k < 2 || beta == 0.0) {
    throw InvalidInput("dynamic bound needs K >= 2 and beta > 0");
  }
  const double scale = n / (beta * std::log(static_cast<double>(k)));
  return 1.0 + (1.0 + scale * regret_rate) / c_beta_k(beta, k);
}

double welfare_loss_factor(double beta, int k) {
  check_args(beta, k);
  if (beta == 0.0) return 1.0;
  const double inv_beta = 1.0 / beta;
  const double em = std::exp(-inv_beta);
  // K / (K + b) = K e^{-L} / (1 + (K-1) e^{-L})
  const double share = k * em / (1.0 + (k - 1) * em);
  return 1.0 / (1.0 + share * log_b_plus_k(inv_beta, k));
}

BoundReport report(double beta, int k, std::optional<int> n,
                   std::optional<double> regret_rate) {
  BoundReport r;
  r.beta = beta;
  r.k = k;
  r.c = c_beta_k(beta, k);
  r.poa_upper = 1.0 + 1.0 / r.c;
  r.poa_upper_asymptotic = poa_upper_asymptotic(beta, k);
  r.poa_lower_asymptote = poa_lower_asymptote(beta, k);
  r.welfare_loss_factor = welfare_loss_factor(beta, k);
  r.smoothness_lambda = r.c;
  r.smoothness_mu = r.c;
  if (n) {
    r.poa_lower = poa_lower(*n, beta, k);
    if (regret_rate && k >= 2 && beta > 0.0) {
      r.dynamic_upper = dynamic_poa_bound(*n, beta, k, *regret_rate);
    }
  }
  return r;
}

}  // namespace ccgame::bounds
