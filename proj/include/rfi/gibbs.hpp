#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rfi/data_model.hpp"
#include "rfi/model_spec.hpp"
#include "rfi/rng.hpp"
#include "rfi/structural.hpp"

namespace rfi {

/// One block of regression coefficients inside the recursive system:
/// the response equation and the raw data traits it is regressed on.
struct StructuralBlockSpec {
    int equation;                 // position in model_traits
    std::vector<int> regressors;  // data trait indices
};

/// How a model family maps onto the shared sampler: which data traits are
/// modeled (one equation each), which equations carry coefficient blocks,
/// how equations share covariance blocks, and which location effects exist.
struct ModelLayout {
    std::vector<int> model_traits;            // data trait index per equation
    std::vector<std::string> labels;          // per-equation parameter label
    std::vector<StructuralBlockSpec> blocks;  // sampled in listed order
    std::vector<std::pair<int, int>> groups;  // (first equation, count), contiguous
    bool intercept = false;
    bool dim_effect = true;
    bool tw_effect = true;
    bool animal_effect = true;
    bool intake_transform = false;  // derive observed-intake genetics from eq 0 + sink block
    bool mt_full = false;           // full multi-trait model: derive intake-residual values

    int m() const { return static_cast<int>(model_traits.size()); }

    static ModelLayout from_spec(const ModelSpec& spec,
                                 const std::vector<std::string>& trait_names);
};

/// Entire parameter state of one chain.
struct FitState {
    std::vector<Eigen::VectorXd> coeffs;  // per structural block
    Eigen::VectorXd mu;                   // m
    Eigen::MatrixXd beta;                 // n_dim x m
    Eigen::MatrixXd tw;                   // n_tw x m
    Eigen::MatrixXd a;                    // q x m
    Eigen::MatrixXd G, R;                 // m x m, entries live inside group blocks
    Eigen::VectorXd tw_var;               // m
    long iteration = 0;
};

/// Gibbs machinery shared by every MCMC family. Owns copies of the data and
/// design, so it stays valid independent of the caller's objects. All
/// sampling methods draw exclusively from the passed Rng.
class GibbsSampler {
public:
    GibbsSampler(ModelLayout layout, const PhenotypeTable& standardized, const Design& design,
                 const Eigen::SparseMatrix<double>& a_inverse, PriorSpec priors);

    const ModelLayout& layout() const { return layout_; }
    const PriorSpec& priors() const { return priors_; }
    int n() const { return static_cast<int>(data_.rows()); }
    int q() const { return static_cast<int>(design_.records_by_animal.size()); }

    FitState make_state(Rng& rng, bool random_init) const;

    /// One full iteration: coefficient blocks, then locations, then variances.
    void sweep(FitState& state, Rng& rng) const;

    /// Conditional distribution of one coefficient block given the rest.
    StructuralConditional structural_conditional_for(const FitState& state, int block) const;
    void sample_structural_block(FitState& state, int block, Rng& rng) const;
    void sample_location_group(FitState& state, int group, Rng& rng) const;
    void sample_variance_group(FitState& state, int group, Rng& rng) const;

    /// Responses with structural terms removed, one column per equation.
    Eigen::MatrixXd working_responses(const FitState& state) const;
    /// mu + fixed + random location terms, one column per equation.
    Eigen::MatrixXd location_predictor(const FitState& state) const;
    /// Draw data from the model given a full state (columns = equations).
    Eigen::MatrixXd simulate_responses(const FitState& state, Rng& rng) const;
    /// Replace the response columns (same layout) and rebuild the regressor
    /// caches. Requires every block regressor to be a modeled trait.
    void set_responses(const Eigen::MatrixXd& by_equation);

    const std::vector<std::string>& param_names() const { return param_names_; }
    Eigen::VectorXd extract_params(const FitState& state) const;

    /// Position of a data trait among the equations, -1 if absent.
    int equation_of(int data_trait) const;

private:
    void build_param_map();

    ModelLayout layout_;
    Design design_;
    Eigen::MatrixXd data_;  // n x k standardized trait columns
    std::vector<std::string> trait_names_;
    std::vector<Eigen::MatrixXd> block_S_;    // regressor matrix per block
    std::vector<Eigen::MatrixXd> block_StS_;  // cached cross products
    Eigen::SparseMatrix<double> a_inv_;
    PriorSpec priors_;
    std::vector<std::string> param_names_;
    std::vector<std::function<double(const FitState&)>> param_fns_;
};

/// Everything one chain produces.
struct ChainResult {
    int chain_index = 0;
    std::vector<std::string> param_names;
    Eigen::MatrixXd samples;        // saved states x params
    std::vector<long> saved_iterations;
    Eigen::MatrixXd trace;          // every iteration x params
    Eigen::MatrixXd gv_mean;        // q x m posterior mean genetic values
    Eigen::VectorXd mu_mean;        // posterior mean intercepts (zero when off)
    Eigen::MatrixXd beta_mean;      // n_dim x m posterior mean fixed effects
    Eigen::VectorXd rfi_gv_mean;    // per-sample derived intake-residual values (mt only)
    std::string error;              // nonempty when the chain failed

    bool ok() const { return error.empty(); }
};

/// Sampler wired up from a model spec: layout from the family, data columns
/// named by the table.
GibbsSampler build_sampler(const ModelSpec& spec, const PhenotypeTable& standardized,
                           const Design& design, const Eigen::SparseMatrix<double>& a_inverse);

ChainResult run_chain(const GibbsSampler& sampler, const McmcSpec& mcmc, int chain_index);

/// All chains, chain c seeded with mcmc.seed + c. Runs chains on worker
/// threads; output is identical to running them sequentially.
std::vector<ChainResult> run_parallel(const GibbsSampler& sampler, const McmcSpec& mcmc,
                                      bool threaded = true);

}  // namespace rfi
