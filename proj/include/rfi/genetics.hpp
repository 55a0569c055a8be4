#pragma once

#include <Eigen/Dense>

namespace rfi {

/// Genetic and residual covariance components of the recursive system:
/// scalar variances for the intake-residual equation plus unstructured sink
/// blocks. Full matrices are assembled with zero intake-sink covariances, so
/// that constraint holds by construction.
struct CovarianceComponents {
    double sigma2_a1 = 0.0;
    double sigma2_e1 = 0.0;
    Eigen::MatrixXd G_sink, R_sink;

    int k() const { return static_cast<int>(G_sink.rows()) + 1; }
    Eigen::MatrixXd G0() const;
    Eigen::MatrixXd R0() const;
};

/// Lambda-weighted quadratic form over the sink block, written as the
/// explicit double sum so it can cross-check the dense triple product.
double delta_term(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& sink_block);

/// Transform a covariance matrix from the residual-intake scale to the
/// observed-intake scale: Lambda^-1 M Lambda'^-1. Computes the dense triple
/// product and verifies it against closed-form first-row/column expressions
/// (lambda-weighted sums, delta on the leading diagonal) to 1e-12.
Eigen::MatrixXd transform_covariance(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& M);

double heritability_rfi(double sigma2_a1, double sigma2_e1);

double heritability_dmi(double sigma2_a1, double sigma2_e1, double delta_a, double delta_e);

/// Genetic correlation between observed intake and one sink trait, from the
/// transformed genetic covariance. sink is an index into the sink block.
double genetic_correlation_dmi_sink(const Eigen::VectorXd& lambda,
                                    const Eigen::MatrixXd& G_sink, double sigma2_a1,
                                    int sink);

/// Correlation between observed-intake genetic values and the intake-residual
/// genetic values implied by the same components: sqrt(sigma2_a1 / (sigma2_a1 + delta_a)).
double genetic_correlation_dmi_rfi(const Eigen::VectorXd& lambda,
                                   const Eigen::MatrixXd& G_sink, double sigma2_a1);

}  // namespace rfi
