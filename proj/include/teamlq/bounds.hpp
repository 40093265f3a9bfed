#pragma once

#include <cstdint>

#include "teamlq/team.hpp"

namespace teamlq {

/// Universal constants of the projection CLT. The exponents have known
/// admissible values; C (and C' which we alias to C) is unknown, so it
/// defaults to 1 and every report carries the `illustrative` flag until the
/// user supplies a value.
struct BoundConstants {
  double C = 1.0;
  double c1 = 1.0 / 100.0;
  double c2 = 1.0 / 10.0;
  double c3 = 1.0 / 100.0;
  double c4 = 1.0 / 200.0;
  bool illustrative = true;
};

/// Gaussian tail weight tau_{l,r}(t) = P(||Z|| > sqrt(3/4) t), Z standard
/// normal in dimension l - r; zero when l == r.
double tail_weight(int l, int r, double t);

/// Everything the explicit finite-n gap bound produces:
/// leading_term + truncation_term bounds the linear-vs-optimal cost gap with
/// the stated probability, valid only while the denominator stays positive.
struct GapBoundReport {
  int n = 0;
  int rank_w = 0;
  double sigma_min = 0.0;
  double tau = 0.0;
  double leading_term = 0.0;
  EstimateWithError truncation_term;
  double probability = 0.0;
  bool valid = false;
};

GapBoundReport explicit_gap_bound(const TeamSpec& spec, int n,
                                  const BoundConstants& consts,
                                  const TeamPolicy& policy, std::int64_t mc_samples,
                                  std::uint64_t seed, int workers = 1);

/// Two-sided sandwich on the optimal non-Gaussian cost:
/// upper = J_G, lower = v_t - (C n^{-c3} / (1 - C n^{-c3})) J_G.
struct FundamentalBounds {
  double upper = 0.0;
  double lower = 0.0;
  bool valid = false;
};
FundamentalBounds fundamental_bounds(double j_gaussian, const EstimateWithError& v_t,
                                     std::int64_t n, const BoundConstants& consts);

/// Largest admissible log-offset b_n such that an ambient envelope
/// exp(-a sqrt(2) ||x|| + b_n) in R^n projects down to exp(-a ||x|| + b) in
/// R^l. Computed entirely in log space; finite for n up to 1e6 and beyond.
double envelope_budget(double a, double b, std::int64_t n, int l);

/// Uniform density deviation bound max{K'/n^c3, exp(-a' n^c4 + b')} with
/// K' = C / (2 pi)^{l/2}.
double uniform_density_bound(const BoundConstants& consts, int l, std::int64_t n,
                             double a_prime, double b_prime);

}  // namespace teamlq
