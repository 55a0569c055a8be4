#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "rfi/data_model.hpp"
#include "rfi/genetics.hpp"
#include "rfi/pedigree.hpp"

namespace rfi {

/// Generative parameters on the standardized scale plus the raw-scale
/// location/scale used when emitting data in original units.
struct GroundTruth {
    Eigen::VectorXd lambda;              // k-1 recursive coefficients
    CovarianceComponents components;     // genetic/residual blocks
    Eigen::VectorXd tw_var;              // per-trait test-week variance
    Eigen::MatrixXd dim_effects;         // n_dim x k fixed-effect values (zero by default)
    Eigen::VectorXd raw_mean, raw_sd;    // per-trait raw scale

    int k() const { return components.k(); }

    /// Analytic phenotypic covariance on the standardized scale:
    /// Lambda^-1 (G0 + R0 + diag(tw_var)) Lambda'^-1.
    Eigen::MatrixXd phenotypic_covariance() const;

    /// Full structural validation: PSD blocks, matching shapes, and (when the
    /// class effects are zero) standardized phenotypic variances within 0.01
    /// of one.
    void validate() const;
};

struct SimulationOutput {
    PhenotypeTable table;
    Eigen::MatrixXd genetic_values;  // q x k true values, standardized scale
};

/// Founder sires and dams plus offspring with uniformly drawn parents.
Pedigree simulate_pedigree(int n_sires, int n_dams, int n_offspring, std::uint64_t seed);

/// Phenotypes for every non-founder animal under the recursive generative
/// model: sinks from their own mixed models, intake assembled from the sinks.
/// Class levels are assigned in balanced shuffled blocks so every level is
/// observed. raw_scale rescales output by the truth's raw means/SDs.
SimulationOutput simulate_phenotypes(const Pedigree& ped, const GroundTruth& truth,
                                     int n_dim_levels, int n_tw_levels, std::uint64_t seed,
                                     bool raw_scale = true);

/// Calibration matching the published summary statistics: structural
/// coefficients (0.351, 0.514, 0.117), sink phenotypic correlations
/// (0.132, 0.193, -0.036), sink heritabilities (0.589, 0.190, 0.002), sink
/// genetic correlations (0.145, 0.184, -0.089), intake-residual variance
/// 1 - b'c12 with c12 = (0.441, 0.556, 0.166) split by heritability 0.240.
/// with_test_week carves 0.05 per trait out of the residual side first.
GroundTruth paper_replica_truth(bool with_test_week = true);

}  // namespace rfi
