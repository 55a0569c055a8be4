#include "rfi/baseline_lr.hpp"

#include <algorithm>
#include <cmath>

#include "rfi/errors.hpp"

namespace rfi {

namespace {

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& M, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(what) + " is singular or not positive definite");
    // Gram matrices can pass LLT with pivots near zero; reject those too.
    Eigen::VectorXd d = Eigen::MatrixXd(llt.matrixL()).diagonal();
    if (d.minCoeff() < 1e-12 * std::max(1.0, d.maxCoeff()))
        throw NumericalError(std::string(what) + " is rank deficient");
    return llt;
}

}  // namespace

RegressionFit fit_stage1(const PhenotypeTable& standardized,
                         const std::vector<int>& sink_indices, int intake) {
    const int n = standardized.n();
    const int p = static_cast<int>(sink_indices.size());
    if (n <= p) throw ValidationError("stage-1 regression needs more records than sinks");
    Eigen::MatrixXd S(n, p);
    for (int j = 0; j < p; ++j) S.col(j) = standardized.traits.col(sink_indices[j]);
    Eigen::VectorXd y = standardized.traits.col(intake);

    Eigen::MatrixXd StS = S.transpose() * S;
    auto llt = checked_llt(StS, "sink cross-product matrix");
    RegressionFit fit;
    fit.coefficients = llt.solve(S.transpose() * y);
    fit.residuals = y - S * fit.coefficients;
    double sigma2 = fit.residuals.squaredNorm() / static_cast<double>(n - p);
    Eigen::MatrixXd StS_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    fit.standard_errors = (sigma2 * StS_inv.diagonal()).cwiseSqrt();
    return fit;
}

Stage2Fit fit_stage2(const Eigen::VectorXd& residuals, const PhenotypeTable& source,
                     const Design& design, const Eigen::SparseMatrix<double>& a_inverse,
                     ModelSpec spec) {
    if (residuals.size() != source.n())
        throw ValidationError("stage-2 residual count does not match the phenotype table");

    PhenotypeTable table;
    table.animal = source.animal;
    table.dim = source.dim;
    table.test_week = source.test_week;
    table.trait_names = {"rfi"};
    table.traits = residuals;

    spec.family = Family::st;
    spec.st_trait = 0;
    spec.sink_indices.clear();
    if (!spec.effects_overridden) {
        spec.intercept = false;
        spec.dim_effect = spec.tw_effect = spec.animal_effect = true;
        spec.effects_overridden = true;
    }
    spec.validate(1);

    GibbsSampler sampler = build_sampler(spec, table, design, a_inverse);
    Stage2Fit fit;
    fit.chains = run_parallel(sampler, spec.mcmc);

    const auto& names = sampler.param_names();
    auto index_of = [&](const std::string& name) {
        auto it = std::find(names.begin(), names.end(), name);
        return it == names.end() ? -1 : static_cast<int>(it - names.begin());
    };
    const int i_a = index_of("sigma2_a_rfi");
    const int i_e = index_of("sigma2_e_rfi");
    const int i_tw = index_of("sigma2_tw_rfi");
    const int i_h2 = index_of("h2_rfi");

    fit.genetic_values = Eigen::VectorXd::Zero(design.q());
    fit.dim_effects = Eigen::VectorXd::Zero(design.n_dim());
    int n_ok = 0;
    for (const auto& chain : fit.chains) {
        if (!chain.ok()) continue;
        ++n_ok;
        if (spec.animal_effect) fit.genetic_values += chain.gv_mean.col(0);
        if (spec.dim_effect) fit.dim_effects += chain.beta_mean.col(0);
        fit.mu += chain.mu_mean(0);
        fit.sigma2_e += chain.samples.col(i_e).mean();
        if (i_a >= 0) fit.sigma2_a += chain.samples.col(i_a).mean();
        if (i_tw >= 0) fit.sigma2_tw += chain.samples.col(i_tw).mean();
        if (i_h2 >= 0) fit.h2 += chain.samples.col(i_h2).mean();
    }
    fit.genetic_values /= n_ok;
    fit.dim_effects /= n_ok;
    fit.mu /= n_ok;
    fit.sigma2_a /= n_ok;
    fit.sigma2_e /= n_ok;
    fit.sigma2_tw /= n_ok;
    fit.h2 /= n_ok;
    return fit;
}

Eigen::VectorXd ls_partial_regression(const Eigen::VectorXd& w, const Eigen::MatrixXd& sinks) {
    if (w.size() != sinks.rows())
        throw ValidationError("adjusted intake vector and sink matrix sizes differ");
    Eigen::MatrixXd StS = sinks.transpose() * sinks;
    auto llt = checked_llt(StS, "sink cross-product matrix");
    return llt.solve(sinks.transpose() * w);
}

Eigen::VectorXd phenotypic_partial_regression(const Eigen::VectorXd& c12,
                                              const Eigen::MatrixXd& V22) {
    if (V22.rows() != V22.cols() || V22.rows() != c12.size())
        throw ValidationError("covariance shapes do not match");
    if ((V22 - V22.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("sink covariance matrix must be symmetric");
    auto llt = checked_llt(V22, "sink covariance matrix");
    return llt.solve(c12);
}

}  // namespace rfi
