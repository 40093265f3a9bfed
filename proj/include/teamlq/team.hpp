#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "teamlq/noise.hpp"
#include "teamlq/rng.hpp"
#include "teamlq/stiefel.hpp"

namespace teamlq {

/// Fixed parameters of a team ensemble: m players with scalar actions,
/// observation sizes obs_dims, cost matrix Q (m x m, SPD) and the l x l
/// mixing matrix W with l = m + sum(obs_dims). The first m rows of W form
/// the W_0 block; the following blocks of heights obs_dims[i] are W_1..W_m.
struct TeamSpec {
  int m = 0;
  std::vector<int> obs_dims;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd W;

  int total_obs() const;                  // lbar = sum obs_dims
  int l() const { return m + total_obs(); }
  int obs_offset(int player) const;       // row offset of W_{player+1} inside W
  Eigen::MatrixXd w0() const { return W.topRows(m); }
  Eigen::MatrixXd w_block(int player) const;  // W_{player+1}

  /// Throws SpecError naming the offending field. Checks Q symmetric SPD with
  /// condition number <= 1e12, W square of the right size, and every W_i
  /// block of full row rank (singular values > 1e-8).
  void validate() const;
};

/// One ensemble member: Z = W R^T with S the first m rows and H_1..H_m the
/// per-player observation blocks.
struct ProblemInstance {
  TeamSpec spec;
  int n = 0;
  OrthonormalMatrix R;
  Eigen::MatrixXd Z;  // l x n

  Eigen::Block<const Eigen::MatrixXd> S() const { return Z.topRows(spec.m); }
  Eigen::Block<const Eigen::MatrixXd> H(int player) const {
    return Z.middleRows(spec.m + spec.obs_offset(player), spec.obs_dims[player]);
  }
};

ProblemInstance build_instance(const TeamSpec& spec, int n, OrthonormalMatrix R);

/// A team policy maps each player's observation to a scalar action.
struct TeamPolicy {
  virtual ~TeamPolicy() = default;
  virtual double action(int player, std::span<const double> obs) const = 0;
};

/// u_i = gains[i]^T y_i.
struct LinearPolicy final : TeamPolicy {
  std::vector<Eigen::VectorXd> gains;

  double action(int player, std::span<const double> obs) const override {
    const auto& g = gains[player];
    double v = 0.0;
    for (int k = 0; k < g.size(); ++k) v += g[k] * obs[k];
    return v;
  }
  Eigen::VectorXd stacked() const;
};

struct ZeroPolicy final : TeamPolicy {
  double action(int, std::span<const double>) const override { return 0.0; }
};

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

/// One-shot cost (1/2) u^T Q u + u^T S xi + (1/2) xi^T S^T Q^{-1} S xi.
double cost(const ProblemInstance& inst, const Eigen::VectorXd& u,
            const Eigen::VectorXd& xi);

/// The best-linear-policy quadratic in stacked gain coordinates:
/// minimize (1/2) g^T M g + g^T b + expected_q. M and b depend only on Q, W.
struct NglSystem {
  Eigen::MatrixXd M;  // lbar x lbar, SPD
  Eigen::VectorXd b;  // lbar
};
NglSystem assemble_ngl(const TeamSpec& spec);

/// Unique optimal linear policy; independent of n and R by construction.
LinearPolicy solve_linear(const TeamSpec& spec);

/// Optimal cost of the Gaussian problem,
/// (1/2) g^T M g + g^T b + (1/2) tr(Q^{-1} W_0 W_0^T) at g = solve_linear.
double gaussian_cost(const TeamSpec& spec);

/// (1/2) tr(Q^{-1} W_0 W_0^T): the exact zero-policy cost for any isotropic noise.
double expected_q(const TeamSpec& spec);

/// Monte Carlo policy cost with deterministic chunked substreams: the result
/// is a pure function of (instance, policy, noise, samples, seed) for any
/// worker count.
EstimateWithError mc_cost(const ProblemInstance& inst, const TeamPolicy& policy,
                          const NoiseModel& noise, std::int64_t samples,
                          std::uint64_t seed, int workers = 1);

/// Two policies on common random numbers; diff = first - second with the
/// paired-sample standard error.
struct PairedCost {
  EstimateWithError first;
  EstimateWithError second;
  double diff = 0.0;
  double diff_std_error = 0.0;
};
PairedCost mc_cost_paired(const ProblemInstance& inst, const TeamPolicy& a,
                          const TeamPolicy& b, const NoiseModel& noise,
                          std::int64_t samples, std::uint64_t seed, int workers = 1);

}  // namespace teamlq
