#include "teamlq/diagnostics.hpp"

#include <cmath>

#include "teamlq/errors.hpp"
#include "teamlq/parallel.hpp"
#include "teamlq/special.hpp"
#include "teamlq/stiefel.hpp"

namespace teamlq {

namespace {

// Regular grid covering the ball ||x|| <= 2, keeping points where phi_l is
// not vanishing. Spacing tightens in low dimension where that is cheap.
std::vector<Eigen::VectorXd> ratio_grid(int l) {
  const int per_axis = l == 1 ? 41 : (l == 2 ? 17 : 9);
  const double step = 4.0 / (per_axis - 1);
  std::vector<Eigen::VectorXd> points;
  std::vector<int> idx(l, 0);
  for (;;) {
    Eigen::VectorXd x(l);
    for (int d = 0; d < l; ++d) x[d] = -2.0 + idx[d] * step;
    if (x.squaredNorm() <= 4.0 + 1e-12 &&
        std::exp(log_phi(l, x.squaredNorm())) >= 1e-4)
      points.push_back(x);
    int d = l - 1;
    while (d >= 0 && ++idx[d] == per_axis) idx[d--] = 0;
    if (d < 0) break;
  }
  return points;
}

constexpr int kTvBinsPerAxis = 16;
constexpr double kTvRange = 4.0;

}  // namespace

DensityReport density_report(const NoiseModel& noise, int l, std::int64_t samples,
                             std::uint64_t seed, int workers) {
  const int n = noise.dim();
  if (l <= 0 || l > n) throw SpecError("density_report: need 1 <= l <= n");
  if (samples < 1000) throw SpecError("density_report: samples must be >= 1e3");

  Rng frame_rng(Rng::derive(seed, seeds::kDensity, 0));
  const OrthonormalMatrix R = sample_stiefel(n, l, frame_rng);

  // Project the sample set; per-chunk moment partials merged in chunk order.
  Eigen::MatrixXd proj(samples, l);
  const int nchunks = chunk_count(samples);
  struct AxisMoments {
    Eigen::VectorXd sum, sumsq;
  };
  std::vector<AxisMoments> parts(nchunks);
  for_each_chunk(samples, workers, [&](int idx, std::int64_t begin, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kDensity, 1, static_cast<std::uint64_t>(idx)));
    Eigen::VectorXd xi(n);
    AxisMoments am{Eigen::VectorXd::Zero(l), Eigen::VectorXd::Zero(l)};
    for (std::int64_t k = 0; k < count; ++k) {
      noise.sample_into(std::span<double>(xi.data(), xi.size()), rng);
      const Eigen::VectorXd p = R.cols.transpose() * xi;
      proj.row(begin + k) = p.transpose();
      am.sum += p;
      am.sumsq += p.cwiseProduct(p);
    }
    parts[idx] = am;
  });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(l), sumsq = Eigen::VectorXd::Zero(l);
  for (const auto& p : parts) {
    sum += p.sum;
    sumsq += p.sumsq;
  }
  const double count = static_cast<double>(samples);
  Eigen::VectorXd h(l);
  const double rate = std::pow(count, -1.0 / (l + 4));
  for (int d = 0; d < l; ++d) {
    const double var = (sumsq[d] - sum[d] * sum[d] / count) / (count - 1.0);
    h[d] = std::sqrt(std::max(var, 1e-300)) * rate;
  }

  // Product-kernel density ratio against phi_l on the grid.
  const std::vector<Eigen::VectorXd> grid = ratio_grid(l);
  std::vector<double> kde(grid.size(), 0.0);
  double lognorm = -0.5 * l * std::log(2.0 * M_PI);
  for (int d = 0; d < l; ++d) lognorm -= std::log(h[d]);
  for_each_chunk(static_cast<std::int64_t>(grid.size()), workers,
                 [&](int, std::int64_t begin, std::int64_t cnt) {
                   for (std::int64_t g = begin; g < begin + cnt; ++g) {
                     const Eigen::VectorXd& x = grid[g];
                     double acc = 0.0;
                     for (std::int64_t s = 0; s < samples; ++s) {
                       double e = 0.0;
                       for (int d = 0; d < l; ++d) {
                         const double t = (x[d] - proj(s, d)) / h[d];
                         e += t * t;
                       }
                       acc += std::exp(-0.5 * e);
                     }
                     kde[g] = acc / count * std::exp(lognorm);
                   }
                 },
                 /*chunk=*/8);
  double sup_ratio = 0.0;
  for (size_t g = 0; g < grid.size(); ++g) {
    const double phi = std::exp(log_phi(l, grid[g].squaredNorm()));
    sup_ratio = std::max(sup_ratio, std::fabs(kde[g] / phi - 1.0));
  }

  // Histogram TV against the exact Gaussian cell masses.
  int ncells = 1;
  for (int d = 0; d < l; ++d) ncells *= kTvBinsPerAxis;
  std::vector<std::int64_t> counts(ncells, 0);
  std::int64_t outside = 0;
  const double bin_w = 2.0 * kTvRange / kTvBinsPerAxis;
  for (std::int64_t s = 0; s < samples; ++s) {
    int flat = 0;
    bool in = true;
    for (int d = 0; d < l && in; ++d) {
      const double v = proj(s, d);
      if (v < -kTvRange || v >= kTvRange) {
        in = false;
        break;
      }
      flat = flat * kTvBinsPerAxis + static_cast<int>((v + kTvRange) / bin_w);
    }
    if (in)
      ++counts[flat];
    else
      ++outside;
  }
  std::vector<double> axis_prob(kTvBinsPerAxis);
  for (int k = 0; k < kTvBinsPerAxis; ++k)
    axis_prob[k] = norm_cdf(-kTvRange + (k + 1) * bin_w) -
                   norm_cdf(-kTvRange + k * bin_w);
  const double inside_axis = norm_cdf(kTvRange) - norm_cdf(-kTvRange);
  double tv = std::fabs(static_cast<double>(outside) / count -
                        (1.0 - std::pow(inside_axis, l)));
  for (int c = 0; c < ncells; ++c) {
    double p = 1.0;
    int rem = c;
    for (int d = l - 1; d >= 0; --d) {
      p *= axis_prob[rem % kTvBinsPerAxis];
      rem /= kTvBinsPerAxis;
    }
    tv += std::fabs(static_cast<double>(counts[c]) / count - p);
  }
  tv = std::min(1.0, std::max(0.0, 0.5 * tv));

  DensityReport rep;
  rep.n = n;
  rep.l = l;
  rep.samples = samples;
  rep.bandwidth = h.mean();
  rep.grid_sup_ratio_err = sup_ratio;
  rep.tv_estimate = tv;
  return rep;
}

std::vector<GapSweepRow> gap_sweep(const TeamSpec& spec, NoiseFamily family,
                                   const std::vector<int>& n_list,
                                   const GapSweepOptions& opts, std::uint64_t seed,
                                   int workers) {
  spec.validate();
  const LinearPolicy linear = solve_linear(spec);
  const double j_gauss = gaussian_cost(spec);
  std::vector<GapSweepRow> rows;
  rows.reserve(n_list.size());
  for (size_t idx = 0; idx < n_list.size(); ++idx) {
    const int n = n_list[idx];
    GapSweepRow row;
    row.n = n;
    row.row_seed = Rng::derive(seed, seeds::kGapRow, static_cast<std::uint64_t>(n),
                               static_cast<std::uint64_t>(idx));
    Rng frame_rng(Rng::derive(row.row_seed, 1));
    ProblemInstance inst =
        build_instance(spec, n, sample_stiefel(n, spec.l(), frame_rng));
    const NoiseModel noise(family, n);
    try {
      const PbpResult pbp = pbp_solve(inst, noise, opts.pbp, Rng::derive(row.row_seed, 2));
      row.pbp_converged = pbp.converged;
      row.pbp_last_change = pbp.last_change;
      const PairedCost pc = mc_cost_paired(inst, linear, pbp.policy, noise,
                                           opts.eval_samples,
                                           Rng::derive(row.row_seed, 3), workers);
      row.j_linear = pc.first;
      row.j_pbp = pc.second;
      row.gap = pc.diff;
      row.gap_std_error = pc.diff_std_error;
    } catch (const PbpNonConvergence& e) {
      row.pbp_converged = false;
      row.pbp_last_change = e.last_change();
      row.j_linear = mc_cost(inst, linear, noise, opts.eval_samples,
                             Rng::derive(row.row_seed, 3), workers);
      row.j_pbp = {std::nan(""), std::nan(""), 0};
      row.gap = std::nan("");
      row.gap_std_error = std::nan("");
    }
    try {
      row.v_trunc = truncated_gaussian_value(
          spec, std::pow(static_cast<double>(n), opts.consts.c4), opts.pbp,
          Rng::derive(row.row_seed, 4));
    } catch (const PbpNonConvergence& e) {
      row.pbp_converged = false;
      row.pbp_last_change = e.last_change();
      row.v_trunc = {std::nan(""), std::nan(""), 0};
    }
    row.bounds = fundamental_bounds(j_gauss, row.v_trunc, n, opts.consts);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EstimateWithError> tail_mass(const ProblemInstance& inst,
                                         const NoiseModel& noise,
                                         const TeamPolicy& policy,
                                         const std::vector<double>& k_list,
                                         std::int64_t samples, std::uint64_t seed,
                                         int workers) {
  if (noise.dim() != inst.n) throw SpecError("tail_mass: noise dimension != n");
  const TeamSpec& spec = inst.spec;
  const int m = spec.m;
  const int nk = static_cast<int>(k_list.size());
  const Eigen::MatrixXd qinv = spec.Q.llt().solve(Eigen::MatrixXd::Identity(m, m));
  const int nchunks = chunk_count(samples);
  std::vector<std::vector<RunningMoments>> parts(nchunks);
  for_each_chunk(samples, workers, [&](int idx, std::int64_t, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kTailMass, static_cast<std::uint64_t>(idx)));
    Eigen::VectorXd xi(inst.n), u(m);
    std::vector<RunningMoments> accs(nk);
    for (std::int64_t s = 0; s < count; ++s) {
      noise.sample_into(std::span<double>(xi.data(), xi.size()), rng);
      const Eigen::VectorXd xihat = inst.R.cols.transpose() * xi;
      const double norm = xihat.norm();
      const Eigen::VectorXd z = spec.W * xihat;
      for (int p = 0; p < m; ++p) {
        const double* y = z.data() + m + spec.obs_offset(p);
        u[p] = policy.action(p, std::span<const double>(y, spec.obs_dims[p]));
      }
      const auto sv = z.head(m);
      const double L = 0.5 * u.dot(spec.Q * u) + u.dot(sv) + 0.5 * sv.dot(qinv * sv);
      for (int k = 0; k < nk; ++k) accs[k].add(norm > k_list[k] ? L : 0.0);
    }
    parts[idx] = std::move(accs);
  });
  std::vector<EstimateWithError> out(nk);
  for (int k = 0; k < nk; ++k) {
    RunningMoments total;
    for (const auto& p : parts) total.merge(p[k]);
    out[k] = {total.mean, total.std_error(), total.n};
  }
  return out;
}

}  // namespace teamlq
