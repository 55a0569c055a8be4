#include "rfi/mt_models.hpp"

#include <algorithm>
#include <cmath>

#include "rfi/errors.hpp"

namespace rfi {

CholeskyStructure cholesky_reparameterize(const Eigen::MatrixXd& sigma,
                                          const std::vector<int>& order) {
    const int k = static_cast<int>(sigma.rows());
    if (sigma.cols() != k)
        throw ValidationError("cholesky_reparameterize: matrix must be square");
    if (!sigma.isApprox(sigma.transpose(), 1e-10))
        throw ValidationError("cholesky_reparameterize: matrix must be symmetric");
    if (static_cast<int>(order.size()) != k)
        throw ValidationError("cholesky_reparameterize: order must list every variable once");
    std::vector<bool> seen(order.size(), false);
    for (int idx : order) {
        if (idx < 0 || idx >= k || seen[static_cast<size_t>(idx)])
            throw ValidationError("cholesky_reparameterize: order is not a permutation");
        seen[static_cast<size_t>(idx)] = true;
    }

    Eigen::MatrixXd perm(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            perm(i, j) = sigma(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);

    Eigen::LLT<Eigen::MatrixXd> llt(perm);
    if (llt.info() != Eigen::Success)
        throw NumericalError("cholesky_reparameterize: matrix is not positive definite");
    Eigen::MatrixXd C = llt.matrixL();

    CholeskyStructure out;
    out.order = order;
    out.D = C.diagonal().array().square();
    out.L = C * C.diagonal().cwiseInverse().asDiagonal();
    out.b = Eigen::MatrixXd::Identity(k, k) -
            out.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k));
    return out;
}

Eigen::VectorXd partial_regressions_from_covariance(const Eigen::MatrixXd& cov) {
    const int k = static_cast<int>(cov.rows());
    if (cov.cols() != k || k < 2)
        throw ValidationError("partial regressions need a square covariance of order >= 2");
    if (!cov.isApprox(cov.transpose(), 1e-10))
        throw ValidationError("covariance matrix must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(cov.bottomRightCorner(k - 1, k - 1));
    if (llt.info() != Eigen::Success)
        throw NumericalError("regressor covariance block is not positive definite");
    return llt.solve(cov.col(0).tail(k - 1));
}

namespace {

std::vector<ChainResult> run_family(ModelSpec spec, Family family,
                                    const PhenotypeTable& standardized, const Design& design,
                                    const Eigen::SparseMatrix<double>& a_inverse) {
    spec.family = family;
    spec.apply_family_defaults();
    spec.validate(standardized.k());
    GibbsSampler sampler = build_sampler(spec, standardized, design, a_inverse);
    return run_parallel(sampler, spec.mcmc);
}

}  // namespace

std::vector<ChainResult> run_st(ModelSpec spec, const PhenotypeTable& standardized,
                                const Design& design,
                                const Eigen::SparseMatrix<double>& a_inverse, int trait) {
    spec.st_trait = trait;
    spec.sink_indices.clear();
    return run_family(std::move(spec), Family::st, standardized, design, a_inverse);
}

std::vector<ChainResult> run_mt(ModelSpec spec, const PhenotypeTable& standardized,
                                const Design& design,
                                const Eigen::SparseMatrix<double>& a_inverse) {
    return run_family(std::move(spec), Family::mt, standardized, design, a_inverse);
}

std::vector<ChainResult> run_mt_chol(ModelSpec spec, const PhenotypeTable& standardized,
                                     const Design& design,
                                     const Eigen::SparseMatrix<double>& a_inverse) {
    return run_family(std::move(spec), Family::mt_chol, standardized, design, a_inverse);
}

}  // namespace rfi
