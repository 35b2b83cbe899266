#pragma once

#include "sdeflow/rng.hpp"
#include "sdeflow/types.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sdeflow {

using DenseMatrix = Eigen::MatrixXd;

/// Signed cofactors (-1)^{i+j} M_ij(A).
DenseMatrix cofactor_matrix(const DenseMatrix& a);

/// d det(A) / d A_ij, which is the cofactor matrix.
DenseMatrix det_gradient(const DenseMatrix& a);

/// Hessian of det as a d^2 x d^2 matrix indexed (i*d + j, k*d + l), by
/// nested central differences with step h = 1e-4 (1 + ||A||_F).
DenseMatrix det_hessian_fd(const DenseMatrix& a);

/// Same Hessian from second-order cofactors.
DenseMatrix det_hessian_analytic(const DenseMatrix& a);

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  /// |lhs - rhs| / max(1, |rhs|).
  double deviation() const;
};

/// lhs = sum_ij d det/d A_ij (BA)_ij, rhs = det(A) tr(B).
IdentitySides first_order_identity(const DenseMatrix& a, const DenseMatrix& b);

enum class HessianMethod { kFiniteDifference, kSecondCofactor };

/// lhs = sum_ijkl d^2 det/dA_ij dA_kl (BA)_ij (BA)_kl, rhs = (tr(B)^2 - tr(B^2)) det(A).
IdentitySides second_order_identity(const DenseMatrix& a, const DenseMatrix& b,
                                    HessianMethod method = HessianMethod::kFiniteDifference);

/// |det J - exp(bv + mart)| / exp(bv + mart). Throws DeterminantSignError
/// when det J <= 0.
double liouville_consistency(const Mat& jac, double bv, double mart);

/// Entries uniform in [-1, 1], redrawn while |det| < 1e-3.
DenseMatrix random_test_matrix(Engine& engine, int d);

struct IdentityCheck {
  std::string identity;  // "first_order" / "second_order" / "gradient"
  int dim = 0;
  int trials = 0;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Randomized identity suite over d in [d_min, d_max]: gradient vs finite
/// differences, first-order identity, second-order identity.
std::vector<IdentityCheck> run_identity_suite(std::uint64_t seed, int trials, int d_min = 2,
                                              int d_max = 5);

}  // namespace sdeflow
