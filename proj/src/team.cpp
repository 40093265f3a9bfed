#include "teamlq/team.hpp"

#include <cmath>
#include <numeric>

#include "teamlq/errors.hpp"
#include "teamlq/parallel.hpp"

namespace teamlq {

int TeamSpec::total_obs() const {
  return std::accumulate(obs_dims.begin(), obs_dims.end(), 0);
}

int TeamSpec::obs_offset(int player) const {
  int off = 0;
  for (int k = 0; k < player; ++k) off += obs_dims[k];
  return off;
}

Eigen::MatrixXd TeamSpec::w_block(int player) const {
  return W.middleRows(m + obs_offset(player), obs_dims[player]);
}

void TeamSpec::validate() const {
  if (m <= 0) throw SpecError("spec.m: must be positive");
  if (static_cast<int>(obs_dims.size()) != m)
    throw SpecError("spec.obs_dims: need one entry per player");
  for (int d : obs_dims)
    if (d <= 0) throw SpecError("spec.obs_dims: entries must be positive");
  if (Q.rows() != m || Q.cols() != m) throw SpecError("spec.Q: must be m x m");
  const double qscale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * qscale)
    throw SpecError("spec.Q: not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0) throw SpecError("spec.Q: not positive definite");
  if (lmax / lmin > 1e12) throw SpecError("spec.Q: condition number exceeds 1e12");
  const int ell = l();
  if (W.rows() != ell || W.cols() != ell)
    throw SpecError("spec.W: must be l x l with l = m + sum(obs_dims)");
  for (int i = 0; i < m; ++i) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w_block(i));
    if (svd.singularValues().minCoeff() <= 1e-8)
      throw SpecError("spec.W: block W_" + std::to_string(i + 1) +
                      " is row-rank deficient");
  }
}

ProblemInstance build_instance(const TeamSpec& spec, int n, OrthonormalMatrix R) {
  spec.validate();
  if (n < spec.l()) throw SpecError("instance.n: must be at least l");
  if (R.n() != n || R.l() != spec.l())
    throw SpecError("instance.R: must be n x l");
  Eigen::MatrixXd Z = spec.W * R.cols.transpose();
  ProblemInstance inst{spec, n, std::move(R), std::move(Z)};
  // R^T has orthonormal rows, so H_i inherits the singular values of W_i;
  // re-check at instance level anyway.
  for (int i = 0; i < spec.m; ++i) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.H(i));
    if (svd.singularValues().minCoeff() <= 1e-8)
      throw SpecError("instance.H_" + std::to_string(i + 1) + ": row-rank deficient");
  }
  return inst;
}

Eigen::VectorXd LinearPolicy::stacked() const {
  int total = 0;
  for (const auto& g : gains) total += static_cast<int>(g.size());
  Eigen::VectorXd out(total);
  int at = 0;
  for (const auto& g : gains) {
    out.segment(at, g.size()) = g;
    at += static_cast<int>(g.size());
  }
  return out;
}

double cost(const ProblemInstance& inst, const Eigen::VectorXd& u,
            const Eigen::VectorXd& xi) {
  const auto& spec = inst.spec;
  if (u.size() != spec.m) throw SpecError("cost: u has wrong length");
  if (xi.size() != inst.n) throw SpecError("cost: xi has wrong length");
  const Eigen::VectorXd s = inst.S() * xi;
  const Eigen::VectorXd qinv_s = spec.Q.llt().solve(s);
  return 0.5 * u.dot(spec.Q * u) + u.dot(s) + 0.5 * s.dot(qinv_s);
}

NglSystem assemble_ngl(const TeamSpec& spec) {
  const int lbar = spec.total_obs();
  NglSystem sys;
  sys.M.resize(lbar, lbar);
  sys.b.resize(lbar);
  const Eigen::MatrixXd w0 = spec.w0();
  for (int i = 0; i < spec.m; ++i) {
    const Eigen::MatrixXd wi = spec.w_block(i);
    const int oi = spec.obs_offset(i);
    sys.b.segment(oi, spec.obs_dims[i]) = wi * w0.row(i).transpose();
    for (int j = 0; j < spec.m; ++j) {
      const Eigen::MatrixXd wj = spec.w_block(j);
      sys.M.block(oi, spec.obs_offset(j), spec.obs_dims[i], spec.obs_dims[j]) =
          spec.Q(i, j) * (wi * wj.transpose());
    }
  }
  return sys;
}

LinearPolicy solve_linear(const TeamSpec& spec) {
  spec.validate();
  const NglSystem sys = assemble_ngl(spec);
  Eigen::LLT<Eigen::MatrixXd> llt(sys.M);
  if (llt.info() != Eigen::Success)
    throw NumericError("solve_linear: NGL system is numerically singular");
  const Eigen::VectorXd gamma = llt.solve(-sys.b);
  const double resid = (sys.M * gamma + sys.b).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, sys.b.cwiseAbs().maxCoeff());
  if (!(resid <= 1e-8 * scale))
    throw NumericError("solve_linear: NGL system is numerically singular");
  LinearPolicy policy;
  policy.gains.reserve(spec.m);
  for (int i = 0; i < spec.m; ++i)
    policy.gains.push_back(gamma.segment(spec.obs_offset(i), spec.obs_dims[i]));
  return policy;
}

double expected_q(const TeamSpec& spec) {
  const Eigen::MatrixXd w0 = spec.w0();
  return 0.5 * spec.Q.llt().solve(w0 * w0.transpose()).trace();
}

double gaussian_cost(const TeamSpec& spec) {
  const NglSystem sys = assemble_ngl(spec);
  const Eigen::VectorXd gamma = solve_linear(spec).stacked();
  return 0.5 * gamma.dot(sys.M * gamma) + gamma.dot(sys.b) + expected_q(spec);
}

namespace {

// Shared per-sample kernel: draw xi, map to z = Z xi, apply the policy
// blockwise, return the realized cost.
struct CostSampler {
  const ProblemInstance& inst;
  const NoiseModel& noise;
  Eigen::MatrixXd qinv;  // dense m x m

  explicit CostSampler(const ProblemInstance& i, const NoiseModel& nz)
      : inst(i), noise(nz) {
    if (nz.dim() != i.n) throw SpecError("mc_cost: noise dimension != instance n");
    qinv = i.spec.Q.llt().solve(Eigen::MatrixXd::Identity(i.spec.m, i.spec.m));
  }

  double policy_cost(const TeamPolicy& policy, const Eigen::VectorXd& z,
                     Eigen::VectorXd& u) const {
    const auto& spec = inst.spec;
    for (int i = 0; i < spec.m; ++i) {
      const double* y = z.data() + spec.m + spec.obs_offset(i);
      u[i] = policy.action(i, std::span<const double>(y, spec.obs_dims[i]));
    }
    const auto s = z.head(spec.m);
    return 0.5 * u.dot(spec.Q * u) + u.dot(s) + 0.5 * s.dot(qinv * s);
  }
};

}  // namespace

EstimateWithError mc_cost(const ProblemInstance& inst, const TeamPolicy& policy,
                          const NoiseModel& noise, std::int64_t samples,
                          std::uint64_t seed, int workers) {
  if (samples <= 0) throw SpecError("mc_cost: samples must be positive");
  const CostSampler sampler(inst, noise);
  const int nchunks = chunk_count(samples);
  std::vector<RunningMoments> parts(nchunks);
  for_each_chunk(samples, workers, [&](int idx, std::int64_t, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kMcChunk, static_cast<std::uint64_t>(idx)));
    Eigen::VectorXd xi(inst.n), u(inst.spec.m);
    RunningMoments acc;
    for (std::int64_t k = 0; k < count; ++k) {
      noise.sample_into(std::span<double>(xi.data(), xi.size()), rng);
      const Eigen::VectorXd z = inst.Z * xi;
      acc.add(sampler.policy_cost(policy, z, u));
    }
    parts[idx] = acc;
  });
  RunningMoments total;
  for (const auto& p : parts) total.merge(p);
  return {total.mean, total.std_error(), total.n};
}

PairedCost mc_cost_paired(const ProblemInstance& inst, const TeamPolicy& a,
                          const TeamPolicy& b, const NoiseModel& noise,
                          std::int64_t samples, std::uint64_t seed, int workers) {
  if (samples <= 0) throw SpecError("mc_cost_paired: samples must be positive");
  const CostSampler sampler(inst, noise);
  const int nchunks = chunk_count(samples);
  struct Part {
    RunningMoments a, b, diff;
  };
  std::vector<Part> parts(nchunks);
  for_each_chunk(samples, workers, [&](int idx, std::int64_t, std::int64_t count) {
    Rng rng(Rng::derive(seed, seeds::kMcChunk, static_cast<std::uint64_t>(idx)));
    Eigen::VectorXd xi(inst.n), u(inst.spec.m);
    Part part;
    for (std::int64_t k = 0; k < count; ++k) {
      noise.sample_into(std::span<double>(xi.data(), xi.size()), rng);
      const Eigen::VectorXd z = inst.Z * xi;
      const double la = sampler.policy_cost(a, z, u);
      const double lb = sampler.policy_cost(b, z, u);
      part.a.add(la);
      part.b.add(lb);
      part.diff.add(la - lb);
    }
    parts[idx] = part;
  });
  RunningMoments ta, tb, td;
  for (const auto& p : parts) {
    ta.merge(p.a);
    tb.merge(p.b);
    td.merge(p.diff);
  }
  return {{ta.mean, ta.std_error(), ta.n},
          {tb.mean, tb.std_error(), tb.n},
          td.mean,
          td.std_error()};
}

}  // namespace teamlq
