#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "rfi/errors.hpp"

namespace rfi {

/// Seeded random stream. Every sampling routine takes one of these explicitly
/// so chains are reproducible and independent given distinct seeds.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unif_(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(engine_); }

    double gaussian() { return norm_(engine_); }

    double gaussian(double mean, double sd) { return mean + sd * norm_(engine_); }

    /// Chi-square via gamma(df/2, 2); accepts fractional df.
    double chi_square(double df) {
        std::gamma_distribution<double> g(df / 2.0, 2.0);
        return g(engine_);
    }

    double gamma(double shape, double scale) {
        std::gamma_distribution<double> g(shape, scale);
        return g(engine_);
    }

    Eigen::VectorXd gaussian_vector(int n) {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = norm_(engine_);
        return z;
    }

    /// Scaled inverse chi-square draw: (df * scale) / chisq(df).
    double scaled_inv_chi_square(double df, double scale) {
        if (df <= 0.0) throw NumericalError("scaled inverse chi-square needs positive df");
        return df * scale / chi_square(df);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> norm_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// Draw from N(mean, cov) given the lower Cholesky factor of cov.
inline Eigen::VectorXd mvn_from_chol(const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& chol_lower, Rng& rng) {
    return mean + chol_lower * rng.gaussian_vector(static_cast<int>(mean.size()));
}

/// Wishart(df, S) via the Bartlett decomposition; S given by its lower Cholesky factor.
inline Eigen::MatrixXd wishart_from_chol(double df, const Eigen::MatrixXd& chol_lower,
                                         Rng& rng) {
    const int p = static_cast<int>(chol_lower.rows());
    if (df <= p - 1) throw NumericalError("Wishart df must exceed dimension - 1");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        T(i, i) = std::sqrt(rng.chi_square(df - i));
        for (int j = 0; j < i; ++j) T(i, j) = rng.gaussian();
    }
    Eigen::MatrixXd LT = chol_lower * T;
    return LT * LT.transpose();
}

/// Inverse-Wishart(df, scale) draw: invert a Wishart(df, scale^-1) sample.
inline Eigen::MatrixXd inverse_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng) {
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    if (llt.info() != Eigen::Success)
        throw NumericalError("inverse-Wishart scale matrix is not positive definite");
    const int p = static_cast<int>(scale.rows());
    // root * root^T = scale^-1; any square root works for the Bartlett construction
    Eigen::MatrixXd root = llt.matrixL().solve(Eigen::MatrixXd::Identity(p, p)).transpose();
    Eigen::MatrixXd W = wishart_from_chol(df, root, rng);
    return W.llt().solve(Eigen::MatrixXd::Identity(p, p));
}

}  // namespace rfi
