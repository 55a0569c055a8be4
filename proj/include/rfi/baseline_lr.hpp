#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rfi/data_model.hpp"
#include "rfi/gibbs.hpp"

namespace rfi {

/// Stage-one intake-on-sinks regression. No intercept: fitted on the
/// standardized scale where every column has mean zero.
struct RegressionFit {
    Eigen::VectorXd coefficients;     // one per sink
    Eigen::VectorXd standard_errors;  // classical OLS
    Eigen::VectorXd residuals;        // the intake-residual phenotypes
};

/// Ordinary least squares of the intake trait on the sink traits.
RegressionFit fit_stage1(const PhenotypeTable& standardized,
                         const std::vector<int>& sink_indices = {1, 2, 3}, int intake = 0);

/// Mixed-model fit of the stage-one residual phenotypes, pooled over chains.
struct Stage2Fit {
    double mu = 0.0;                 // posterior mean intercept, zero when not fitted
    Eigen::VectorXd dim_effects;     // posterior means per level
    Eigen::VectorXd genetic_values;  // posterior means per animal
    double sigma2_a = 0.0;
    double sigma2_e = 0.0;
    double sigma2_tw = 0.0;
    double h2 = 0.0;
    std::vector<ChainResult> chains;
};

/// Run the single-trait sampler on the stage-one residuals. The stage-one
/// coefficients stay fixed; they enter only through the residuals. Unless
/// the caller overrode the effect switches, the location model matches the
/// richest one-step variant (lactation stage, test week, animal).
Stage2Fit fit_stage2(const Eigen::VectorXd& residuals, const PhenotypeTable& source,
                     const Design& design, const Eigen::SparseMatrix<double>& a_inverse,
                     ModelSpec spec);

/// Exact solve of S'S b = S'w for a location-adjusted intake vector w.
Eigen::VectorXd ls_partial_regression(const Eigen::VectorXd& w, const Eigen::MatrixXd& sinks);

/// b = V22^-1 c12 from covariances alone.
Eigen::VectorXd phenotypic_partial_regression(const Eigen::VectorXd& c12,
                                              const Eigen::MatrixXd& V22);

}  // namespace rfi
