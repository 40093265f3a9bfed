#include "teamlq/pbp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "teamlq/errors.hpp"
#include "teamlq/parallel.hpp"

namespace teamlq {

namespace {

int upper_cell(const std::vector<double>& edges, double v) {
  // Interior edges are edges[1..bins-1]; out-of-range values clamp.
  const int bins = static_cast<int>(edges.size()) - 1;
  const auto begin = edges.begin() + 1;
  const auto end = edges.end() - 1;
  const int idx = static_cast<int>(std::upper_bound(begin, end, v) - begin);
  return std::min(std::max(idx, 0), bins - 1);
}

}  // namespace

double TabulatedPolicy::action(int player, std::span<const double> obs) const {
  return players[player].values[cell_index(player, obs)];
}

int TabulatedPolicy::cell_count(int player) const {
  const auto& t = players[player];
  int c = 1;
  for (int d = 0; d < t.dims; ++d) c *= t.bins_per_axis;
  return c;
}

int TabulatedPolicy::cell_index(int player, std::span<const double> obs) const {
  const auto& t = players[player];
  int flat = 0;
  for (int d = 0; d < t.dims; ++d)
    flat = flat * t.bins_per_axis + upper_cell(t.edges[d], obs[d]);
  return flat;
}

std::vector<double> TabulatedPolicy::cell_center(int player, int flat_index) const {
  const auto& t = players[player];
  std::vector<double> center(t.dims);
  for (int d = t.dims - 1; d >= 0; --d) {
    const int k = flat_index % t.bins_per_axis;
    flat_index /= t.bins_per_axis;
    center[d] = 0.5 * (t.edges[d][k] + t.edges[d][k + 1]);
  }
  return center;
}

int PbpConfig::bins_for(int obs_dim) const {
  if (bins > 0) return bins;
  return obs_dim == 1 ? 64 : 24;
}

void PbpConfig::validate() const {
  if (bins < 0) throw SpecError("pbp.bins: must be positive (or 0 for auto)");
  if (samples <= 0) throw SpecError("pbp.samples: must be positive");
  if (max_iters <= 0) throw SpecError("pbp.max_iters: must be positive");
  if (!(damping > 0.0 && damping <= 1.0))
    throw SpecError("pbp.damping: must be in (0, 1]");
}

namespace {

// Draws one z = W xihat sample (length l) and returns its inclusion weight
// (always 1 except under truncation). The callable owns any scratch space.
using SampleFn = std::function<double(Rng&, Eigen::VectorXd&)>;

SampleFn instance_source(const ProblemInstance& inst, const NoiseModel& noise) {
  if (noise.dim() != inst.n) throw SpecError("pbp: noise dimension != instance n");
  auto xi = std::make_shared<Eigen::VectorXd>(inst.n);
  const Eigen::MatrixXd* Z = &inst.Z;
  return [xi, Z, &noise](Rng& rng, Eigen::VectorXd& z) {
    noise.sample_into(std::span<double>(xi->data(), xi->size()), rng);
    z.noalias() = (*Z) * (*xi);
    return 1.0;
  };
}

SampleFn truncated_gaussian_source(const TeamSpec& spec, double radius) {
  auto zeta = std::make_shared<Eigen::VectorXd>(spec.l());
  const Eigen::MatrixXd* W = &spec.W;
  return [zeta, W, radius](Rng& rng, Eigen::VectorXd& z) {
    for (int i = 0; i < zeta->size(); ++i) (*zeta)[i] = rng.normal();
    z.noalias() = (*W) * (*zeta);
    return zeta->norm() <= radius ? 1.0 : 0.0;
  };
}

struct BinnedProblem {
  const TeamSpec* spec = nullptr;
  TabulatedPolicy grid;                      // edges fixed, values mutable
  std::vector<Eigen::VectorXd> mass;         // per player, per cell: sum of weights
  std::vector<Eigen::VectorXd> lin;          // per player, per cell: sum w * s_p
  std::vector<Eigen::MatrixXd> cross;        // [p * m + q], p < q: joint weights
  double sum_q = 0.0;
  std::int64_t total = 0;

  const Eigen::MatrixXd& cross_of(int p, int q) const {
    return cross[static_cast<size_t>(std::min(p, q)) * spec->m + std::max(p, q)];
  }
};

// Quantile edges per player axis from a dedicated substream.
void build_edges(BinnedProblem& bp, const SampleFn& draw, const PbpConfig& cfg,
                 std::uint64_t seed) {
  const TeamSpec& spec = *bp.spec;
  const int edge_samples =
      static_cast<int>(std::min<std::int64_t>(cfg.samples, 200000));
  Rng rng(Rng::derive(seed, seeds::kPbpEdges));
  Eigen::VectorXd z(spec.l());
  std::vector<std::vector<std::vector<double>>> vals(spec.m);
  for (int p = 0; p < spec.m; ++p)
    vals[p].assign(spec.obs_dims[p], std::vector<double>());
  for (int p = 0; p < spec.m; ++p)
    for (auto& v : vals[p]) v.reserve(edge_samples);
  for (int s = 0; s < edge_samples; ++s) {
    draw(rng, z);
    for (int p = 0; p < spec.m; ++p) {
      const int off = spec.m + spec.obs_offset(p);
      for (int d = 0; d < spec.obs_dims[p]; ++d) vals[p][d].push_back(z[off + d]);
    }
  }
  bp.grid.players.resize(spec.m);
  for (int p = 0; p < spec.m; ++p) {
    auto& table = bp.grid.players[p];
    table.dims = spec.obs_dims[p];
    table.bins_per_axis = cfg.bins_for(table.dims);
    const int bins = table.bins_per_axis;
    table.edges.resize(table.dims);
    for (int d = 0; d < table.dims; ++d) {
      auto& v = vals[p][d];
      std::sort(v.begin(), v.end());
      auto& e = table.edges[d];
      e.resize(bins + 1);
      for (int k = 0; k <= bins; ++k) {
        const double q = static_cast<double>(k) / bins;
        const double pos = q * (v.size() - 1);
        const auto lo = static_cast<size_t>(pos);
        const auto hi = std::min(lo + 1, v.size() - 1);
        e[k] = v[lo] + (pos - lo) * (v[hi] - v[lo]);
      }
      for (int k = 1; k <= bins; ++k)  // enforce strictly increasing
        if (e[k] <= e[k - 1]) e[k] = std::nextafter(e[k - 1], 1e300);
    }
    table.values.assign(bp.grid.cell_count(p), 0.0);
  }
}

// One serial chunked pass accumulating the binned moments.
void accumulate(BinnedProblem& bp, const SampleFn& draw, std::int64_t samples,
                std::uint64_t seed) {
  const TeamSpec& spec = *bp.spec;
  const int m = spec.m;
  bp.mass.assign(m, Eigen::VectorXd());
  bp.lin.assign(m, Eigen::VectorXd());
  for (int p = 0; p < m; ++p) {
    bp.mass[p] = Eigen::VectorXd::Zero(bp.grid.cell_count(p));
    bp.lin[p] = Eigen::VectorXd::Zero(bp.grid.cell_count(p));
  }
  bp.cross.assign(static_cast<size_t>(m) * m, Eigen::MatrixXd());
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q)
      bp.cross[static_cast<size_t>(p) * m + q] =
          Eigen::MatrixXd::Zero(bp.grid.cell_count(p), bp.grid.cell_count(q));
  bp.sum_q = 0.0;
  bp.total = samples;

  Eigen::VectorXd z(spec.l());
  std::vector<int> cell(m);
  const Eigen::MatrixXd qinv =
      spec.Q.llt().solve(Eigen::MatrixXd::Identity(m, m));
  for_each_chunk(samples, 1, [&](int idx, std::int64_t, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kPbpChunk, static_cast<std::uint64_t>(idx)));
    for (std::int64_t k = 0; k < count; ++k) {
      const double w = draw(rng, z);
      if (w == 0.0) continue;
      const auto s = z.head(m);
      bp.sum_q += w * 0.5 * s.dot(qinv * s);
      for (int p = 0; p < m; ++p) {
        const int off = spec.m + spec.obs_offset(p);
        cell[p] = bp.grid.cell_index(
            p, std::span<const double>(z.data() + off, spec.obs_dims[p]));
        bp.mass[p][cell[p]] += w;
        bp.lin[p][cell[p]] += w * s[p];
      }
      for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q)
          bp.cross[static_cast<size_t>(p) * m + q](cell[p], cell[q]) += w;
    }
  });
}

double empirical_objective(const BinnedProblem& bp) {
  const TeamSpec& spec = *bp.spec;
  double v = bp.sum_q;
  for (int p = 0; p < spec.m; ++p) {
    const auto& u = bp.grid.players[p].values;
    const Eigen::Map<const Eigen::VectorXd> up(u.data(), u.size());
    v += 0.5 * spec.Q(p, p) * up.cwiseProduct(up).dot(bp.mass[p]);
    v += up.dot(bp.lin[p]);
    for (int q = p + 1; q < spec.m; ++q) {
      const auto& uqv = bp.grid.players[q].values;
      const Eigen::Map<const Eigen::VectorXd> uq(uqv.data(), uqv.size());
      v += spec.Q(p, q) * up.dot(bp.cross_of(p, q) * uq);
    }
  }
  return v / static_cast<double>(bp.total);
}

// Gauss-Seidel sweeps of the per-cell stationarity update.
PbpResult iterate(BinnedProblem& bp, const PbpConfig& cfg, double tol) {
  const TeamSpec& spec = *bp.spec;
  const int m = spec.m;
  PbpResult res;
  res.tol = tol;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    double sup_change = 0.0;
    for (int p = 0; p < m; ++p) {
      Eigen::VectorXd couple = Eigen::VectorXd::Zero(bp.grid.cell_count(p));
      for (int q = 0; q < m; ++q) {
        if (q == p) continue;
        const auto& uqv = bp.grid.players[q].values;
        const Eigen::Map<const Eigen::VectorXd> uq(uqv.data(), uqv.size());
        if (q > p)
          couple.noalias() += spec.Q(p, q) * (bp.cross_of(p, q) * uq);
        else
          couple.noalias() += spec.Q(p, q) * (bp.cross_of(q, p).transpose() * uq);
      }
      auto& u = bp.grid.players[p].values;
      for (int c = 0; c < static_cast<int>(u.size()); ++c) {
        if (bp.mass[p][c] <= 0.0) continue;
        const double target =
            -(couple[c] + bp.lin[p][c]) / (spec.Q(p, p) * bp.mass[p][c]);
        const double next = (1.0 - cfg.damping) * u[c] + cfg.damping * target;
        sup_change = std::max(sup_change, std::fabs(next - u[c]));
        u[c] = next;
      }
    }
    res.sweep_costs.push_back(empirical_objective(bp));
    res.iterations = iter + 1;
    res.last_change = sup_change;
    if (sup_change < tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged && res.last_change > 10.0 * tol)
    throw PbpNonConvergence(res.last_change, tol);
  res.policy = bp.grid;
  return res;
}

PbpResult solve_binned(const TeamSpec& spec, const SampleFn& draw,
                       const PbpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  for (int d : spec.obs_dims)
    if (d > 2) throw SpecError("pbp: observation dimension must be <= 2");
  BinnedProblem bp;
  bp.spec = &spec;
  build_edges(bp, draw, cfg, seed);
  accumulate(bp, draw, cfg.samples, seed);
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-4 * (1.0 + gaussian_cost(spec));
  return iterate(bp, cfg, tol);
}

// Weighted in-sample cost of a policy under the same substreams that built it.
EstimateWithError weighted_value(const TeamSpec& spec, const SampleFn& draw,
                                 const TeamPolicy& policy, std::int64_t samples,
                                 std::uint64_t seed) {
  const int m = spec.m;
  const Eigen::MatrixXd qinv = spec.Q.llt().solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::VectorXd z(spec.l()), u(m);
  RunningMoments acc;
  for_each_chunk(samples, 1, [&](int idx, std::int64_t, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kPbpChunk, static_cast<std::uint64_t>(idx)));
    for (std::int64_t k = 0; k < count; ++k) {
      const double w = draw(rng, z);
      if (w == 0.0) {
        acc.add(0.0);
        continue;
      }
      for (int p = 0; p < m; ++p) {
        const int off = spec.m + spec.obs_offset(p);
        u[p] = policy.action(
            p, std::span<const double>(z.data() + off, spec.obs_dims[p]));
      }
      const auto s = z.head(m);
      acc.add(w * (0.5 * u.dot(spec.Q * u) + u.dot(s) + 0.5 * s.dot(qinv * s)));
    }
  });
  return {acc.mean, acc.std_error(), acc.n};
}

}  // namespace

PbpResult pbp_solve(const ProblemInstance& inst, const NoiseModel& noise,
                    const PbpConfig& cfg, std::uint64_t seed) {
  return solve_binned(inst.spec, instance_source(inst, noise), cfg, seed);
}

EstimateWithError truncated_gaussian_value(const TeamSpec& spec, double trunc_radius,
                                           const PbpConfig& cfg, std::uint64_t seed) {
  spec.validate();
  if (!(trunc_radius >= 0.0))
    throw SpecError("truncated_gaussian_value: radius must be nonnegative");
  const SampleFn draw = truncated_gaussian_source(spec, trunc_radius);
  const PbpResult res = solve_binned(spec, draw, cfg, seed);
  return weighted_value(spec, draw, res.policy, cfg.samples, seed);
}

EstimateWithError brute_force_optimal(const ProblemInstance& inst,
                                      const NoiseModel& noise, int bins,
                                      std::int64_t samples, std::uint64_t seed) {
  const TeamSpec& spec = inst.spec;
  if (spec.m > 2) throw SpecError("brute_force_optimal: m must be <= 2");
  for (int d : spec.obs_dims)
    if (d != 1) throw SpecError("brute_force_optimal: observations must be scalar");
  if (bins <= 0 || samples <= 0)
    throw SpecError("brute_force_optimal: bins and samples must be positive");
  if (noise.dim() != inst.n)
    throw SpecError("brute_force_optimal: noise dimension != instance n");

  const int m = spec.m;
  // Materialize the sample set: observations, S xi, q(xi).
  Eigen::MatrixXd ys(samples, m), ss(samples, m);
  Eigen::VectorXd qs(samples);
  const Eigen::MatrixXd qinv = spec.Q.llt().solve(Eigen::MatrixXd::Identity(m, m));
  {
    Eigen::VectorXd xi(inst.n);
    for_each_chunk(samples, 1, [&](int idx, std::int64_t begin, std::int64_t count) {
      Rng rng(Rng::derive(seed, seeds::kBruteForce, static_cast<std::uint64_t>(idx)));
      for (std::int64_t k = 0; k < count; ++k) {
        noise.sample_into(std::span<double>(xi.data(), xi.size()), rng);
        const Eigen::VectorXd z = inst.Z * xi;
        for (int p = 0; p < m; ++p) {
          ys(begin + k, p) = z[spec.m + spec.obs_offset(p)];
          ss(begin + k, p) = z[p];
        }
        const auto s = z.head(m);
        qs[begin + k] = 0.5 * s.dot(qinv * s);
      }
    });
  }

  // Quantile edges from the full sample set.
  TabulatedPolicy policy;
  policy.players.resize(m);
  for (int p = 0; p < m; ++p) {
    auto& t = policy.players[p];
    t.dims = 1;
    t.bins_per_axis = bins;
    std::vector<double> v(ys.col(p).data(), ys.col(p).data() + samples);
    std::sort(v.begin(), v.end());
    t.edges.resize(1);
    auto& e = t.edges[0];
    e.resize(bins + 1);
    for (int k = 0; k <= bins; ++k) {
      const double pos = static_cast<double>(k) / bins * (v.size() - 1);
      const auto lo = static_cast<size_t>(pos);
      const auto hi = std::min(lo + 1, v.size() - 1);
      e[k] = v[lo] + (pos - lo) * (v[hi] - v[lo]);
    }
    for (int k = 1; k <= bins; ++k)
      if (e[k] <= e[k - 1]) e[k] = std::nextafter(e[k - 1], 1e300);
    t.values.assign(bins, 0.0);
  }

  // Cell occupancy moments.
  std::vector<int> cells(static_cast<size_t>(samples) * m);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(m, bins);
  Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(m, bins);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(bins, bins);  // players (0,1)
  for (std::int64_t s = 0; s < samples; ++s) {
    for (int p = 0; p < m; ++p) {
      const double y = ys(s, p);
      const int c = policy.cell_index(p, std::span<const double>(&y, 1));
      cells[s * m + p] = c;
      mass(p, c) += 1.0;
      lin(p, c) += ss(s, p);
    }
    if (m == 2) joint(cells[s * m], cells[s * m + 1]) += 1.0;
  }

  // Stationarity over every (player, nonempty cell) pair as one linear system.
  std::vector<std::pair<int, int>> unknowns;
  std::vector<int> slot(static_cast<size_t>(m) * bins, -1);
  for (int p = 0; p < m; ++p)
    for (int c = 0; c < bins; ++c)
      if (mass(p, c) > 0.0) {
        slot[static_cast<size_t>(p) * bins + c] = static_cast<int>(unknowns.size());
        unknowns.emplace_back(p, c);
      }
  const int dim = static_cast<int>(unknowns.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  for (int k = 0; k < dim; ++k) {
    const auto [p, c] = unknowns[k];
    A(k, k) = spec.Q(p, p) * mass(p, c);
    rhs[k] = -lin(p, c);
    for (int q = 0; q < m; ++q) {
      if (q == p) continue;
      for (int c2 = 0; c2 < bins; ++c2) {
        const int k2 = slot[static_cast<size_t>(q) * bins + c2];
        if (k2 < 0) continue;
        const double cnt = p < q ? joint(c, c2) : joint(c2, c);
        A(k, k2) = spec.Q(p, q) * cnt;
      }
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("brute_force_optimal: stationarity system not solvable");
  const Eigen::VectorXd sol = ldlt.solve(rhs);
  for (int k = 0; k < dim; ++k)
    policy.players[unknowns[k].first].values[unknowns[k].second] = sol[k];

  // Monte Carlo cost of the solved policy on the sample set.
  RunningMoments acc;
  Eigen::VectorXd u(m);
  for (std::int64_t s = 0; s < samples; ++s) {
    for (int p = 0; p < m; ++p) u[p] = policy.players[p].values[cells[s * m + p]];
    const Eigen::VectorXd srow = ss.row(s).transpose();
    acc.add(0.5 * u.dot(spec.Q * u) + u.dot(srow) + qs[s]);
  }
  return {acc.mean, acc.std_error(), acc.n};
}

}  // namespace teamlq
