#include "teamlq/bounds.hpp"

#include <cmath>

#include "teamlq/errors.hpp"
#include "teamlq/parallel.hpp"
#include "teamlq/special.hpp"

namespace teamlq {

double tail_weight(int l, int r, double t) {
  if (l <= 0 || r <= 0 || r > l) throw SpecError("tail_weight: need 1 <= r <= l");
  if (t < 0.0) throw SpecError("tail_weight: t must be nonnegative");
  if (l == r) return 0.0;
  const double tau = chi_tail(l - r, std::sqrt(0.75) * t);
  return std::min(1.0, std::max(0.0, tau));
}

GapBoundReport explicit_gap_bound(const TeamSpec& spec, int n,
                                  const BoundConstants& consts,
                                  const TeamPolicy& policy, std::int64_t mc_samples,
                                  std::uint64_t seed, int workers) {
  spec.validate();
  if (n <= 0) throw SpecError("explicit_gap_bound: n must be positive");
  if (mc_samples <= 0) throw SpecError("explicit_gap_bound: mc_samples must be positive");
  const int l = spec.l();
  const int m = spec.m;

  GapBoundReport rep;
  rep.n = n;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(spec.W);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-8 * sv.maxCoeff();
  rep.rank_w = 0;
  rep.sigma_min = 0.0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) {
      ++rep.rank_w;
      rep.sigma_min = sv[i];  // singular values are sorted descending
    }

  const double nd = static_cast<double>(n);
  const double radius_n = std::pow(nd, consts.c4);
  rep.tau = tail_weight(l, rep.rank_w, radius_n);
  const double numer = consts.C / std::pow(nd, consts.c3) + rep.tau;
  const double denom = 1.0 - consts.C / (nd * nd * nd) - rep.tau;
  rep.valid = denom > 0.0;
  rep.leading_term = numer / denom * gaussian_cost(spec);
  rep.probability = 1.0 - consts.C * std::exp(-std::pow(nd, consts.c2));

  // Truncation term: E[ 1{W zeta outside A} L(gammabar(W zeta), W zeta) ],
  // zeta ~ N(0, I_l). Membership in A and the policy cutoff both use the
  // per-block radius sigma_min n^{c4} / (2 sqrt(m+1)).
  const double block_radius = rep.sigma_min * radius_n / (2.0 * std::sqrt(m + 1.0));
  const Eigen::MatrixXd qinv = spec.Q.llt().solve(Eigen::MatrixXd::Identity(m, m));
  const int nchunks = chunk_count(mc_samples);
  std::vector<RunningMoments> parts(nchunks);
  for_each_chunk(mc_samples, workers, [&](int idx, std::int64_t, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kBoundMc, static_cast<std::uint64_t>(idx)));
    Eigen::VectorXd zeta(l), z(l), u(m);
    RunningMoments acc;
    for (std::int64_t k = 0; k < count; ++k) {
      for (int i = 0; i < l; ++i) zeta[i] = rng.normal();
      z.noalias() = spec.W * zeta;
      bool in_a = z.head(m).norm() <= block_radius;  // the W_0 block
      for (int p = 0; p < m && in_a; ++p)
        in_a = z.segment(m + spec.obs_offset(p), spec.obs_dims[p]).norm() <=
               block_radius;
      if (in_a) {
        acc.add(0.0);
        continue;
      }
      for (int p = 0; p < m; ++p) {
        const auto block = z.segment(m + spec.obs_offset(p), spec.obs_dims[p]);
        u[p] = block.norm() <= block_radius
                   ? policy.action(p, std::span<const double>(block.data(),
                                                              block.size()))
                   : 0.0;
      }
      const auto s = z.head(m);
      acc.add(0.5 * u.dot(spec.Q * u) + u.dot(s) + 0.5 * s.dot(qinv * s));
    }
    parts[idx] = acc;
  });
  RunningMoments total;
  for (const auto& p : parts) total.merge(p);
  rep.truncation_term = {total.mean, total.std_error(), total.n};
  return rep;
}

FundamentalBounds fundamental_bounds(double j_gaussian, const EstimateWithError& v_t,
                                     std::int64_t n, const BoundConstants& consts) {
  if (n <= 0) throw SpecError("fundamental_bounds: n must be positive");
  const double ratio = consts.C / std::pow(static_cast<double>(n), consts.c3);
  FundamentalBounds out;
  out.valid = ratio < 1.0;
  out.upper = j_gaussian;
  out.lower = v_t.value - ratio / (1.0 - ratio) * j_gaussian;
  return out;
}

double envelope_budget(double a, double b, std::int64_t n, int l) {
  if (!(a > 0.0)) throw SpecError("envelope_budget: a must be positive");
  if (l <= 0 || n <= l) throw SpecError("envelope_budget: need n > l >= 1");
  const double d = static_cast<double>(n - l);
  return b + d * std::log(a / std::sqrt(M_PI)) + std::lgamma(0.5 * d) -
         std::log(2.0) - std::lgamma(d);
}

double uniform_density_bound(const BoundConstants& consts, int l, std::int64_t n,
                             double a_prime, double b_prime) {
  if (l <= 0 || n <= 0) throw SpecError("uniform_density_bound: bad dimensions");
  const double kprime = consts.C / std::pow(2.0 * M_PI, 0.5 * l);
  const double nd = static_cast<double>(n);
  return std::max(kprime / std::pow(nd, consts.c3),
                  std::exp(-a_prime * std::pow(nd, consts.c4) + b_prime));
}

}  // namespace teamlq
