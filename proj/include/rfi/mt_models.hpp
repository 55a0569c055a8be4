#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rfi/gibbs.hpp"

namespace rfi {

/// Unit lower-triangular factorization sigma_perm = L * diag(D) * L' of a
/// covariance matrix after reordering its variables.  `b = I - inverse(L)`
/// holds the recursive regression coefficients: row p regresses variable p
/// (in permuted order) on the variables before it, and the residual
/// innovations have the diagonal covariance D.
struct CholeskyStructure {
    Eigen::MatrixXd L;
    Eigen::VectorXd D;
    Eigen::MatrixXd b;
    std::vector<int> order;
};

/// Factor `sigma` under the variable order `order` (a permutation of
/// 0..k-1, entries index the original rows). Throws ValidationError on a
/// malformed permutation or an asymmetric matrix, NumericalError when the
/// permuted matrix is not positive definite.
CholeskyStructure cholesky_reparameterize(const Eigen::MatrixXd& sigma,
                                          const std::vector<int>& order);

/// Partial regressions of the first variable on the remaining ones implied
/// by a covariance matrix: solves cov22 b = cov21.
Eigen::VectorXd partial_regressions_from_covariance(const Eigen::MatrixXd& cov);

/// Single-trait animal model on one trait column.
std::vector<ChainResult> run_st(ModelSpec spec, const PhenotypeTable& standardized,
                                const Design& design,
                                const Eigen::SparseMatrix<double>& a_inverse, int trait);

/// Multiple-trait animal model with unstructured genetic and residual
/// covariances over the intake trait and its regressor traits.
std::vector<ChainResult> run_mt(ModelSpec spec, const PhenotypeTable& standardized,
                                const Design& design,
                                const Eigen::SparseMatrix<double>& a_inverse);

/// Fully recursive reparameterization of the multiple-trait model: each
/// trait is regressed on all traits later in the causal order, and the
/// trait-level covariances become diagonal.
std::vector<ChainResult> run_mt_chol(ModelSpec spec, const PhenotypeTable& standardized,
                                     const Design& design,
                                     const Eigen::SparseMatrix<double>& a_inverse);

}  // namespace rfi
