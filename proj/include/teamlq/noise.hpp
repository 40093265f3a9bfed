#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <string_view>

#include "teamlq/rng.hpp"

namespace teamlq {

enum class NoiseFamily {
  gaussian,
  exp_product,
  laplace_product,
  uniform_cube_product,
  uniform_ball,
};

/// Exponential upper envelope of a log-concave density:
/// f(x) <= exp(-a*||x|| + b) on all of R^n when valid.
struct TailEnvelope {
  double a = 0.0;
  double b = 0.0;
  bool valid = false;
};

/// An isotropic log-concave law on R^n. Every family has mean zero and
/// identity covariance by construction:
///   gaussian             N(0, I_n)
///   exp_product          coordinates i.i.d. Exp(1) - 1
///   laplace_product      coordinates i.i.d. Laplace with scale 1/sqrt(2)
///   uniform_cube_product coordinates i.i.d. uniform on [-sqrt(3), sqrt(3)]
///   uniform_ball         uniform on the ball of radius sqrt(n+2)
class NoiseModel {
 public:
  NoiseModel(NoiseFamily family, int n);

  NoiseFamily family() const { return family_; }
  int dim() const { return n_; }

  /// One draw written into x (length n).
  void sample_into(std::span<double> x, Rng& rng) const;

  /// count i.i.d. draws, one per row.
  Eigen::MatrixXd sample(int count, Rng& rng) const;

  /// Exact log-density; -inf off the support.
  double log_density(std::span<const double> x) const;

  TailEnvelope tail_envelope() const;

  double ball_radius() const;  // uniform_ball support radius sqrt(n+2)

  static NoiseFamily family_from_string(std::string_view s);
  static std::string family_name(NoiseFamily f);
  static const std::array<NoiseFamily, 5>& catalog();

 private:
  NoiseFamily family_;
  int n_;
};

}  // namespace teamlq
