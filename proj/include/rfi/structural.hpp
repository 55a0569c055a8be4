#pragma once

#include <Eigen/Dense>

#include "rfi/rng.hpp"

namespace rfi {

/// Unit-triangular structural matrix for the intake equation: row 0 carries
/// -lambda against each sink trait, every other row is the identity.
Eigen::MatrixXd structural_matrix(const Eigen::VectorXd& lambda);

/// Closed-form inverse: same matrix with the lambda signs flipped.
Eigen::MatrixXd structural_inverse(const Eigen::VectorXd& lambda);

/// Conditional distribution of regression coefficients b for w = S b + e with
/// e ~ N(0, sigma2_e I) and prior b ~ N(prior_mean * 1, prior_var * I):
/// mean = C^{-1} (S'w + sigma2_e/prior_var * prior_mean * 1),
/// covariance = sigma2_e * C^{-1}, with C = S'S + sigma2_e/prior_var * I.
/// prior_var = +infinity gives the pure least-squares limit.
struct StructuralConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::LLT<Eigen::MatrixXd> chol;  // factor of C, reusable for the draw
    double sigma2_e = 1.0;
};

StructuralConditional structural_conditional(const Eigen::MatrixXd& StS,
                                             const Eigen::VectorXd& Stw, double sigma2_e,
                                             double prior_mean, double prior_var);

/// One MVN draw from the conditional above.
Eigen::VectorXd sample_structural(const StructuralConditional& cond, Rng& rng);

}  // namespace rfi
