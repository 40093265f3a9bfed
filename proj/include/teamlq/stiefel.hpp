#pragma once

#include <Eigen/Dense>

#include "teamlq/rng.hpp"

namespace teamlq {

/// An n x l matrix with orthonormal columns (a Stiefel frame).
struct OrthonormalMatrix {
  Eigen::MatrixXd cols;

  int n() const { return static_cast<int>(cols.rows()); }
  int l() const { return static_cast<int>(cols.cols()); }

  /// max-entry |R^T R - I|.
  double orthonormality_defect() const;
};

/// Haar draw on the n x l Stiefel manifold: thin QR of an i.i.d. Gaussian
/// matrix with column signs fixed so the triangular factor has positive
/// diagonal. l = n (full orthogonal group) is allowed.
OrthonormalMatrix sample_stiefel(int n, int l, Rng& rng);

/// Coordinates R^T x of the orthogonal projection of x onto range(R).
Eigen::VectorXd project_coords(const OrthonormalMatrix& R, const Eigen::VectorXd& x);

/// First l columns of I_n; handy in tests and canonical constructions.
OrthonormalMatrix canonical_frame(int n, int l);

}  // namespace teamlq
