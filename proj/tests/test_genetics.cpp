#include <doctest.h>

#include "rfi/genetics.hpp"
#include "rfi/rng.hpp"
#include "rfi/structural.hpp"

using namespace rfi;

namespace {

Eigen::MatrixXd random_spd(int n, Rng& rng) {
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = rng.gaussian();
    return B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_SUITE_BEGIN("genetics");

TEST_CASE("two-trait transform reproduces the hand product") {
    Eigen::VectorXd lam(1);
    lam << 0.5;
    Eigen::MatrixXd G0 = Eigen::MatrixXd::Identity(2, 2);
    auto Gstar = transform_covariance(lam, G0);
    CHECK(Gstar(0, 0) == doctest::Approx(1.25));
    CHECK(Gstar(0, 1) == doctest::Approx(0.5));
    CHECK(Gstar(1, 0) == doctest::Approx(0.5));
    CHECK(Gstar(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("identity structure leaves the covariance unchanged") {
    Rng rng(5);
    Eigen::MatrixXd M = random_spd(4, rng);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(3);
    CHECK((transform_covariance(lam, M) - M).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("transform preserves symmetry and positive definiteness") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        int k = 2 + static_cast<int>(rng.uniform() * 4);
        Eigen::VectorXd lam(k - 1);
        for (int i = 0; i < k - 1; ++i) lam(i) = rng.uniform(-1.0, 1.0);
        Eigen::MatrixXd M = random_spd(k, rng);
        auto T = transform_covariance(lam, M);
        CHECK((T - T.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("delta term equals the transformed leading diagonal under the zero constraint") {
    Rng rng(23);
    for (int rep = 0; rep < 50; ++rep) {
        CovarianceComponents cc;
        cc.sigma2_a1 = rng.uniform(0.05, 1.0);
        cc.sigma2_e1 = rng.uniform(0.05, 1.0);
        cc.G_sink = random_spd(3, rng);
        cc.R_sink = random_spd(3, rng);
        Eigen::VectorXd lam(3);
        for (int i = 0; i < 3; ++i) lam(i) = rng.uniform(-0.8, 0.8);
        auto Gstar = transform_covariance(lam, cc.G0());
        double da = delta_term(lam, cc.G_sink);
        CHECK(Gstar(0, 0) == doctest::Approx(cc.sigma2_a1 + da).epsilon(1e-12));
        // sink block must pass through untouched
        CHECK((Gstar.bottomRightCorner(3, 3) - cc.G_sink).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("heritabilities") {
    CHECK(heritability_rfi(0.24, 0.76) == doctest::Approx(0.24));
    CHECK(heritability_rfi(1.0, 1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(heritability_rfi(0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(heritability_rfi(-0.1, 0.5), ValidationError);
    CHECK(heritability_dmi(0.24, 0.76, 0.0, 0.0) == doctest::Approx(heritability_rfi(0.24, 0.76)));
    CHECK(heritability_dmi(0.1, 0.3, 0.15, 0.45) == doctest::Approx(0.25));
    CHECK_THROWS_AS(heritability_dmi(0.0, 0.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("doubling lambda quadruples the delta contributions") {
    Rng rng(31);
    Eigen::MatrixXd Gs = random_spd(3, rng);
    Eigen::VectorXd lam(3);
    lam << 0.3, 0.5, 0.1;
    CHECK(delta_term(2.0 * lam, Gs) == doctest::Approx(4.0 * delta_term(lam, Gs)).epsilon(1e-12));
}

TEST_CASE("intake-sink genetic correlation equals the normalized transform entry") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::MatrixXd Gs = random_spd(3, rng);
        double sa = rng.uniform(0.05, 1.0);
        Eigen::VectorXd lam(3);
        for (int i = 0; i < 3; ++i) lam(i) = rng.uniform(-0.8, 0.8);
        CovarianceComponents cc;
        cc.sigma2_a1 = sa;
        cc.sigma2_e1 = 1.0;
        cc.G_sink = Gs;
        cc.R_sink = Eigen::MatrixXd::Identity(3, 3);
        auto Gstar = transform_covariance(lam, cc.G0());
        for (int t = 0; t < 3; ++t) {
            double expect = Gstar(0, t + 1) / std::sqrt(Gstar(0, 0) * Gstar(t + 1, t + 1));
            double got = genetic_correlation_dmi_sink(lam, Gs, sa, t);
            CHECK(got == doctest::Approx(expect).epsilon(1e-12));
            CHECK(std::abs(got) <= 1.0 + 1e-12);
        }
        // correlation with the intake residual: cov is sigma2_a1 itself
        double r = genetic_correlation_dmi_rfi(lam, Gs, sa);
        CHECK(r == doctest::Approx(sa / std::sqrt(Gstar(0, 0) * sa)).epsilon(1e-12));
    }
}

TEST_CASE("zero lambda gives zero intake-sink correlation") {
    Eigen::MatrixXd Gs = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(3);
    for (int t = 0; t < 3; ++t)
        CHECK(genetic_correlation_dmi_sink(lam, Gs, 0.5, t) == doctest::Approx(0.0));
}

TEST_SUITE_END();
