#pragma once

#include <cstdint>
#include <vector>

#include "teamlq/bounds.hpp"
#include "teamlq/noise.hpp"
#include "teamlq/pbp.hpp"
#include "teamlq/team.hpp"

namespace teamlq {

/// How close the projected noise looks to the l-dimensional standard normal:
/// sup over a grid on ||x|| <= 2 of |kde/phi_l - 1|, and a histogram
/// total-variation estimate over per-axis bins covering [-4,4].
struct DensityReport {
  int n = 0;
  int l = 0;
  std::int64_t samples = 0;
  double bandwidth = 0.0;
  double grid_sup_ratio_err = 0.0;
  double tv_estimate = 0.0;
};

/// Draws a Haar frame, projects `samples` noise draws, and measures the two
/// deviations. Kernel density uses a Gaussian product kernel with per-axis
/// bandwidth sigma_hat * samples^{-1/(l+4)}; ratio checks skip grid points
/// where phi_l < 1e-4. Requires samples >= 1e3.
DensityReport density_report(const NoiseModel& noise, int l, std::int64_t samples,
                             std::uint64_t seed, int workers = 1);

struct GapSweepRow {
  int n = 0;
  std::uint64_t row_seed = 0;
  EstimateWithError j_linear;
  EstimateWithError j_pbp;
  double gap = 0.0;            // j_linear - j_pbp
  double gap_std_error = 0.0;  // paired, common random numbers
  EstimateWithError v_trunc;   // truncated value at radius n^{c4}
  FundamentalBounds bounds;
  bool pbp_converged = false;
  double pbp_last_change = 0.0;
};

struct GapSweepOptions {
  PbpConfig pbp;
  std::int64_t eval_samples = 200000;
  BoundConstants consts;
};

/// One row per n: fresh Haar R, linear and person-by-person policies, both
/// costs on a common evaluation sample set, plus the sandwich bounds.
/// A non-converged row is reported (flag + NaN costs) without aborting.
std::vector<GapSweepRow> gap_sweep(const TeamSpec& spec, NoiseFamily family,
                                   const std::vector<int>& n_list,
                                   const GapSweepOptions& opts, std::uint64_t seed,
                                   int workers = 1);

/// T(n,k) = E[ 1{||R^T xi|| > k} L(policy actions, xi) ] for each k, common
/// random numbers across the k list.
std::vector<EstimateWithError> tail_mass(const ProblemInstance& inst,
                                         const NoiseModel& noise,
                                         const TeamPolicy& policy,
                                         const std::vector<double>& k_list,
                                         std::int64_t samples, std::uint64_t seed,
                                         int workers = 1);

}  // namespace teamlq
