#include "rfi/structural.hpp"

#include <cmath>
#include <limits>

#include "rfi/errors.hpp"

namespace rfi {

Eigen::MatrixXd structural_matrix(const Eigen::VectorXd& lambda) {
    const int k = static_cast<int>(lambda.size()) + 1;
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(k, k);
    for (int j = 1; j < k; ++j) L(0, j) = -lambda(j - 1);
    return L;
}

Eigen::MatrixXd structural_inverse(const Eigen::VectorXd& lambda) {
    return structural_matrix(-lambda);
}

StructuralConditional structural_conditional(const Eigen::MatrixXd& StS,
                                             const Eigen::VectorXd& Stw, double sigma2_e,
                                             double prior_mean, double prior_var) {
    if (sigma2_e <= 0.0) throw NumericalError("structural conditional needs sigma2_e > 0");
    if (prior_var <= 0.0) throw ValidationError("structural prior variance must be positive");
    const int p = static_cast<int>(StS.rows());
    double ridge = std::isinf(prior_var) ? 0.0 : sigma2_e / prior_var;
    Eigen::MatrixXd C = StS + ridge * Eigen::MatrixXd::Identity(p, p);
    StructuralConditional out;
    out.chol.compute(C);
    if (out.chol.info() != Eigen::Success)
        throw NumericalError("structural-coefficient system is not positive definite");
    Eigen::VectorXd rhs = Stw + Eigen::VectorXd::Constant(p, ridge * prior_mean);
    out.mean = out.chol.solve(rhs);
    out.covariance = sigma2_e * out.chol.solve(Eigen::MatrixXd::Identity(p, p));
    out.sigma2_e = sigma2_e;
    return out;
}

Eigen::VectorXd sample_structural(const StructuralConditional& cond, Rng& rng) {
    const int p = static_cast<int>(cond.mean.size());
    // C = L L'; with z ~ N(0, I), mean + sqrt(sigma2) L^-T z has covariance sigma2 C^-1.
    Eigen::VectorXd z = rng.gaussian_vector(p);
    Eigen::VectorXd step =
        cond.chol.matrixU().solve((std::sqrt(cond.sigma2_e) * z).eval());
    return cond.mean + step;
}

}  // namespace rfi
