#pragma once

#include <cstdint>
#include <vector>

#include "teamlq/team.hpp"

namespace teamlq {

/// Piecewise-constant per-player policy on a product grid. Bins are
/// equal-probability (empirical quantile) per axis; observations outside the
/// grid clamp to the nearest boundary cell. Only 1- and 2-dimensional
/// observations are supported.
class TabulatedPolicy final : public TeamPolicy {
 public:
  struct PlayerTable {
    int dims = 0;
    int bins_per_axis = 0;
    std::vector<std::vector<double>> edges;  // per axis, bins+1 strictly increasing
    std::vector<double> values;              // bins^dims, axis-0 major
  };

  std::vector<PlayerTable> players;

  double action(int player, std::span<const double> obs) const override;
  int cell_count(int player) const;
  int cell_index(int player, std::span<const double> obs) const;
  std::vector<double> cell_center(int player, int flat_index) const;
};

struct PbpConfig {
  int bins = 0;  // per axis; 0 means auto (64 for 1-d, 24 for 2-d observations)
  std::int64_t samples = 200000;
  int max_iters = 200;
  double damping = 1.0;
  double tol = -1.0;  // <= 0 means auto: 1e-4 * (1 + gaussian_cost(spec))

  int bins_for(int obs_dim) const;
  void validate() const;
};

struct PbpResult {
  TabulatedPolicy policy;
  int iterations = 0;
  double last_change = 0.0;
  bool converged = false;
  double tol = 0.0;
  std::vector<double> sweep_costs;  // empirical objective after each sweep
};

/// Person-by-person fixed point on binned conditional expectations over a
/// fixed Monte Carlo sample set. Each sweep is exact block-coordinate descent
/// on the empirical objective, so sweep_costs is non-increasing. Throws
/// PbpNonConvergence when max_iters is reached with sup-change > 10*tol.
PbpResult pbp_solve(const ProblemInstance& inst, const NoiseModel& noise,
                    const PbpConfig& cfg, std::uint64_t seed);

/// Minimum of E[1{||zeta|| <= trunc_radius} L(...)] over policies, zeta the
/// l-dimensional standard Gaussian driving z = W zeta; solved with the same
/// binned iteration using indicator-weighted samples.
EstimateWithError truncated_gaussian_value(const TeamSpec& spec, double trunc_radius,
                                           const PbpConfig& cfg, std::uint64_t seed);

/// Independent small-instance oracle (m <= 2, scalar observations): solves
/// the full stationarity linear system over all cell pairs in one shot and
/// returns the Monte Carlo cost of the resulting policy.
EstimateWithError brute_force_optimal(const ProblemInstance& inst,
                                      const NoiseModel& noise, int bins,
                                      std::int64_t samples, std::uint64_t seed);

}  // namespace teamlq
