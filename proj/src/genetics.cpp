#include "rfi/genetics.hpp"

#include <cmath>

#include "rfi/errors.hpp"
#include "rfi/structural.hpp"

namespace rfi {

Eigen::MatrixXd CovarianceComponents::G0() const {
    const int n = k();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    M(0, 0) = sigma2_a1;
    M.bottomRightCorner(n - 1, n - 1) = G_sink;
    return M;
}

Eigen::MatrixXd CovarianceComponents::R0() const {
    const int n = k();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    M(0, 0) = sigma2_e1;
    M.bottomRightCorner(n - 1, n - 1) = R_sink;
    return M;
}

double delta_term(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& sink_block) {
    const int m = static_cast<int>(lambda.size());
    double acc = 0.0;
    for (int t = 0; t < m; ++t) {
        acc += lambda(t) * lambda(t) * sink_block(t, t);
        for (int u = 0; u < m; ++u)
            if (u != t) acc += lambda(t) * lambda(u) * sink_block(t, u);
    }
    return acc;
}

Eigen::MatrixXd transform_covariance(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& M) {
    const int k = static_cast<int>(M.rows());
    if (M.cols() != k || static_cast<int>(lambda.size()) != k - 1)
        throw ValidationError("transform_covariance: shape mismatch");
    Eigen::MatrixXd Linv = structural_inverse(lambda);
    Eigen::MatrixXd out = Linv * M * Linv.transpose();

    // Closed-form counterpart: sink block untouched, first row/column are
    // lambda-weighted sums, leading diagonal picks up the delta term.
    const Eigen::MatrixXd sink = M.bottomRightCorner(k - 1, k - 1);
    double d00 = M(0, 0) + delta_term(lambda, sink);
    for (int t = 0; t < k - 1; ++t) d00 += 2.0 * lambda(t) * M(0, t + 1);
    if (std::abs(out(0, 0) - d00) > 1e-12 * std::max(1.0, std::abs(d00)))
        throw NumericalError("covariance transform disagrees with closed form (diagonal)");
    for (int j = 1; j < k; ++j) {
        double v = M(0, j);
        for (int t = 0; t < k - 1; ++t) v += lambda(t) * M(t + 1, j);
        if (std::abs(out(0, j) - v) > 1e-12 * std::max(1.0, std::abs(v)))
            throw NumericalError("covariance transform disagrees with closed form (row)");
    }
    return out;
}

double heritability_rfi(double sigma2_a1, double sigma2_e1) {
    if (sigma2_a1 < 0.0 || sigma2_e1 < 0.0)
        throw ValidationError("variance components must be nonnegative");
    double total = sigma2_a1 + sigma2_e1;
    if (total <= 0.0) throw ValidationError("heritability undefined when both variances are zero");
    return sigma2_a1 / total;
}

double heritability_dmi(double sigma2_a1, double sigma2_e1, double delta_a, double delta_e) {
    double num = sigma2_a1 + delta_a;
    double den = num + sigma2_e1 + delta_e;
    if (den <= 0.0) throw ValidationError("heritability denominator must be positive");
    return num / den;
}

double genetic_correlation_dmi_sink(const Eigen::VectorXd& lambda,
                                    const Eigen::MatrixXd& G_sink, double sigma2_a1,
                                    int sink) {
    CovarianceComponents cc;
    cc.sigma2_a1 = sigma2_a1;
    cc.sigma2_e1 = 1.0;  // unused by the genetic transform
    cc.G_sink = G_sink;
    cc.R_sink = Eigen::MatrixXd::Identity(G_sink.rows(), G_sink.cols());
    Eigen::MatrixXd Gstar = transform_covariance(lambda, cc.G0());
    double var_sink = Gstar(sink + 1, sink + 1);
    if (var_sink <= 0.0) throw ValidationError("sink genetic variance must be positive");
    return Gstar(0, sink + 1) / std::sqrt(Gstar(0, 0) * var_sink);
}

double genetic_correlation_dmi_rfi(const Eigen::VectorXd& lambda,
                                   const Eigen::MatrixXd& G_sink, double sigma2_a1) {
    if (sigma2_a1 <= 0.0) throw ValidationError("intake-residual genetic variance must be positive");
    double da = delta_term(lambda, G_sink);
    return std::sqrt(sigma2_a1 / (sigma2_a1 + da));
}

}  // namespace rfi
