#include "teamlq/noise.hpp"

#include <array>
#include <cmath>

#include "teamlq/errors.hpp"
#include "teamlq/special.hpp"

namespace teamlq {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kLaplaceScale = 0.7071067811865476;  // 1/sqrt(2), unit variance

// log volume of the n-ball of radius rho
double log_ball_volume(int n, double rho) {
  return 0.5 * n * std::log(M_PI) + n * std::log(rho) - std::lgamma(0.5 * n + 1.0);
}
}  // namespace

NoiseModel::NoiseModel(NoiseFamily family, int n) : family_(family), n_(n) {
  if (n <= 0) throw SpecError("NoiseModel: dimension must be positive");
}

double NoiseModel::ball_radius() const { return std::sqrt(static_cast<double>(n_) + 2.0); }

void NoiseModel::sample_into(std::span<double> x, Rng& rng) const {
  if (static_cast<int>(x.size()) != n_) throw SpecError("sample_into: wrong length");
  switch (family_) {
    case NoiseFamily::gaussian:
      for (auto& v : x) v = rng.normal();
      return;
    case NoiseFamily::exp_product:
      for (auto& v : x) v = rng.exponential() - 1.0;
      return;
    case NoiseFamily::laplace_product:
      for (auto& v : x) {
        const double u = rng.uniform_open();
        v = u < 0.5 ? kLaplaceScale * std::log(2.0 * u)
                    : -kLaplaceScale * std::log(2.0 * (1.0 - u));
      }
      return;
    case NoiseFamily::uniform_cube_product:
      for (auto& v : x) v = (2.0 * rng.uniform01() - 1.0) * kSqrt3;
      return;
    case NoiseFamily::uniform_ball: {
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (auto& v : x) {
          v = rng.normal();
          norm2 += v * v;
        }
      } while (norm2 == 0.0);
      const double r = ball_radius() *
                       std::pow(rng.uniform_open(), 1.0 / static_cast<double>(n_)) /
                       std::sqrt(norm2);
      for (auto& v : x) v *= r;
      return;
    }
  }
  throw SpecError("sample_into: unknown family");
}

Eigen::MatrixXd NoiseModel::sample(int count, Rng& rng) const {
  if (count <= 0) throw SpecError("sample: count must be positive");
  Eigen::MatrixXd out(count, n_);
  std::vector<double> row(n_);
  for (int i = 0; i < count; ++i) {
    sample_into(row, rng);
    for (int j = 0; j < n_; ++j) out(i, j) = row[j];
  }
  return out;
}

double NoiseModel::log_density(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw SpecError("log_density: wrong length");
  switch (family_) {
    case NoiseFamily::gaussian: {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return -0.5 * r2 - 0.5 * n_ * std::log(2.0 * M_PI);
    }
    case NoiseFamily::exp_product: {
      double s = 0.0;
      for (double v : x) {
        if (v <= -1.0) return kNegInf;
        s += v + 1.0;
      }
      return -s;
    }
    case NoiseFamily::laplace_product: {
      double s = 0.0;
      for (double v : x) s += std::fabs(v);
      return -s / kLaplaceScale - n_ * std::log(2.0 * kLaplaceScale);
    }
    case NoiseFamily::uniform_cube_product: {
      for (double v : x)
        if (std::fabs(v) > kSqrt3) return kNegInf;
      return -0.5 * n_ * std::log(12.0);
    }
    case NoiseFamily::uniform_ball: {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      const double rho = ball_radius();
      if (r2 > rho * rho) return kNegInf;
      return -log_ball_volume(n_, rho);
    }
  }
  throw SpecError("log_density: unknown family");
}

TailEnvelope NoiseModel::tail_envelope() const {
  const double n = static_cast<double>(n_);
  switch (family_) {
    case NoiseFamily::gaussian:
      // -||x||^2/2 <= -||x|| + 1/2
      return {1.0, 0.5 - 0.5 * n * std::log(2.0 * M_PI), true};
    case NoiseFamily::exp_product:
      // per coordinate: -(x+1) <= -|x| + 1 on the support
      return {1.0, n, true};
    case NoiseFamily::laplace_product:
      // exact: sum |x_i| >= ||x||
      return {1.0 / kLaplaceScale, -n * std::log(2.0 * kLaplaceScale), true};
    case NoiseFamily::uniform_cube_product:
      return {1.0, n * (kSqrt3 - 0.5 * std::log(12.0)), true};
    case NoiseFamily::uniform_ball: {
      const double rho = ball_radius();
      return {1.0, rho - log_ball_volume(n_, rho), true};
    }
  }
  return {};
}

NoiseFamily NoiseModel::family_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseFamily::gaussian;
  if (s == "exp_product") return NoiseFamily::exp_product;
  if (s == "laplace_product") return NoiseFamily::laplace_product;
  if (s == "uniform_cube_product") return NoiseFamily::uniform_cube_product;
  if (s == "uniform_ball") return NoiseFamily::uniform_ball;
  throw SpecError("noise_family: unknown family '" + std::string(s) + "'");
}

std::string NoiseModel::family_name(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::exp_product: return "exp_product";
    case NoiseFamily::laplace_product: return "laplace_product";
    case NoiseFamily::uniform_cube_product: return "uniform_cube_product";
    case NoiseFamily::uniform_ball: return "uniform_ball";
  }
  return "?";
}

const std::array<NoiseFamily, 5>& NoiseModel::catalog() {
  static const std::array<NoiseFamily, 5> families = {
      NoiseFamily::gaussian, NoiseFamily::exp_product, NoiseFamily::laplace_product,
      NoiseFamily::uniform_cube_product, NoiseFamily::uniform_ball};
  return families;
}

}  // namespace teamlq
