#include "teamlq/stiefel.hpp"

#include <stdexcept>

#include "teamlq/errors.hpp"

namespace teamlq {

double OrthonormalMatrix::orthonormality_defect() const {
  const Eigen::MatrixXd gram = cols.transpose() * cols;
  return (gram - Eigen::MatrixXd::Identity(l(), l())).cwiseAbs().maxCoeff();
}

OrthonormalMatrix sample_stiefel(int n, int l, Rng& rng) {
  if (n <= 0 || l <= 0) throw SpecError("sample_stiefel: dimensions must be positive");
  if (l > n) throw SpecError("sample_stiefel: l > n");

  Eigen::MatrixXd g(n, l);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < l; ++j) g(i, j) = rng.normal();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, l);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
  // Sign fix: Q D with D = sign(diag(R)) makes the draw exactly Haar.
  for (int j = 0; j < l; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return OrthonormalMatrix{std::move(q)};
}

Eigen::VectorXd project_coords(const OrthonormalMatrix& R, const Eigen::VectorXd& x) {
  if (x.size() != R.n()) throw SpecError("project_coords: x has wrong length");
  return R.cols.transpose() * x;
}

OrthonormalMatrix canonical_frame(int n, int l) {
  if (n <= 0 || l <= 0 || l > n) throw SpecError("canonical_frame: bad dimensions");
  return OrthonormalMatrix{Eigen::MatrixXd::Identity(n, l)};
}

}  // namespace teamlq
