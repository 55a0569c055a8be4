#include <doctest.h>

#include <array>
#include <string>
#include <vector>

#include "rfi/baseline_lr.hpp"
#include "rfi/errors.hpp"
#include "rfi/pedigree.hpp"
#include "rfi/rng.hpp"

using namespace rfi;

namespace {

PhenotypeTable correlated_table(int n, Rng& rng) {
    // correlated four-trait data with realistic intake-sink structure
    PhenotypeTable t;
    t.trait_names = {"dmi", "mbw", "milkne", "dbw"};
    t.traits.resize(n, 4);
    for (int i = 0; i < n; ++i) {
        double mbw = rng.gaussian(), milkne = 0.13 * mbw + rng.gaussian();
        double dbw = 0.19 * mbw + rng.gaussian();
        double dmi = 0.35 * mbw + 0.5 * milkne + 0.12 * dbw + 0.7 * rng.gaussian();
        t.traits.row(i) << dmi, mbw, milkne, dbw;
        t.animal.push_back("a" + std::to_string(i));
        t.dim.push_back("71");
        t.test_week.push_back("1");
    }
    return standardize(t);
}

}  // namespace

TEST_SUITE_BEGIN("baseline_lr");

TEST_CASE("stage-1 residuals are orthogonal to every sink") {
    Rng rng(2024);
    auto t = correlated_table(400, rng);
    auto fit = fit_stage1(t);
    for (int j = 1; j < 4; ++j) {
        double dot = std::abs(fit.residuals.dot(t.traits.col(j))) / t.n();
        CHECK(dot < 1e-10);
    }
    // residuals' sample correlation with sinks is zero as well
    for (int j = 1; j < 4; ++j) {
        double r = fit.residuals.dot(t.traits.col(j)) /
                   std::sqrt(fit.residuals.squaredNorm() * t.traits.col(j).squaredNorm());
        CHECK(std::abs(r) < 1e-10);
    }
}

TEST_CASE("orthogonal sinks give zero coefficients and intact intake") {
    PhenotypeTable t;
    t.trait_names = {"dmi", "mbw", "milkne", "dbw"};
    t.traits.resize(4, 4);
    // Hadamard columns: mutually orthogonal, intake orthogonal to every sink
    t.traits.col(0) << 1, 1, -1, -1;
    t.traits.col(1) << 1, -1, 1, -1;
    t.traits.col(2) << 1, -1, -1, 1;
    t.traits.col(3) << 1, 1, 1, 1;
    for (int i = 0; i < 4; ++i) {
        t.animal.push_back("a" + std::to_string(i));
        t.dim.push_back("71");
        t.test_week.push_back("1");
    }
    auto fit = fit_stage1(t);
    CHECK(fit.coefficients.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fit.residuals - t.traits.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exact-fit system has zero residuals") {
    PhenotypeTable t;
    t.trait_names = {"dmi", "mbw", "milkne", "dbw"};
    t.traits.resize(3, 4);
    Rng rng(3);
    Eigen::MatrixXd S(3, 3);
    for (int i = 0; i < 9; ++i) S(i / 3, i % 3) = rng.gaussian();
    Eigen::Vector3d b(0.4, -0.2, 0.9);
    t.traits.col(0) = S * b;
    for (int j = 0; j < 3; ++j) t.traits.col(j + 1) = S.col(j);
    for (int i = 0; i < 3; ++i) {
        t.animal.push_back("a" + std::to_string(i));
        t.dim.push_back("71");
        t.test_week.push_back("1");
    }
    CHECK_THROWS_AS(fit_stage1(t), ValidationError);  // n == p is rejected
    // append one consistent row so n > p
    PhenotypeTable t4 = t;
    t4.animal.push_back("a3");
    t4.dim.push_back("71");
    t4.test_week.push_back("1");
    t4.traits.conservativeResize(4, 4);
    Eigen::Vector3d s4(0.3, 0.7, -0.4);
    t4.traits.row(3) << s4.dot(b), s4(0), s4(1), s4(2);
    auto fit = fit_stage1(t4);
    CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fit.coefficients - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singular sink matrix raises a rank error") {
    PhenotypeTable t;
    t.trait_names = {"dmi", "mbw", "milkne", "dbw"};
    t.traits.resize(6, 4);
    Rng rng(8);
    for (int i = 0; i < 6; ++i) {
        double s = rng.gaussian();
        t.traits.row(i) << rng.gaussian(), s, 2.0 * s, rng.gaussian();
        t.animal.push_back("a" + std::to_string(i));
        t.dim.push_back("71");
        t.test_week.push_back("1");
    }
    CHECK_THROWS_AS(fit_stage1(t), NumericalError);
}

TEST_CASE("ls partial regression with zero locations equals stage 1") {
    Rng rng(77);
    auto t = correlated_table(250, rng);
    auto fit = fit_stage1(t);
    Eigen::MatrixXd S = t.traits.rightCols(3);
    auto b = ls_partial_regression(t.traits.col(0), S);
    CHECK((b - fit.coefficients).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ls partial regression matches an explicit dense solve") {
    Rng rng(78);
    Eigen::MatrixXd S(5, 3);
    for (int i = 0; i < 15; ++i) S(i / 3, i % 3) = rng.gaussian();
    Eigen::VectorXd w = rng.gaussian_vector(5);
    auto b = ls_partial_regression(w, S);
    Eigen::VectorXd oracle = (S.transpose() * S).inverse() * S.transpose() * w;
    CHECK((b - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("phenotypic partial regression from published correlations") {
    Eigen::VectorXd c12(3);
    c12 << 0.441, 0.556, 0.166;
    Eigen::MatrixXd V22(3, 3);
    V22 << 1.0, 0.132, 0.193,
           0.132, 1.0, -0.036,
           0.193, -0.036, 1.0;
    auto b = phenotypic_partial_regression(c12, V22);
    CHECK(b(0) == doctest::Approx(0.351).epsilon(0.015));
    CHECK(b(1) == doctest::Approx(0.514).epsilon(0.01));
    CHECK(b(2) == doctest::Approx(0.117).epsilon(0.05));
    // defining identity V22 b = c12
    CHECK((V22 * b - c12).cwiseAbs().maxCoeff() < 1e-12);
    // identity covariance passes c12 straight through
    auto direct = phenotypic_partial_regression(c12, Eigen::MatrixXd::Identity(3, 3));
    CHECK((direct - c12).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("phenotypic partial regression on sample covariance equals stage 1") {
    Rng rng(79);
    auto t = correlated_table(300, rng);
    Eigen::MatrixXd X = t.traits;
    Eigen::RowVectorXd mu = X.colwise().mean();
    Eigen::MatrixXd C = (X.rowwise() - mu).transpose() * (X.rowwise() - mu) / (t.n() - 1);
    auto b = phenotypic_partial_regression(C.col(0).tail(3), C.bottomRightCorner(3, 3));
    auto fit = fit_stage1(t);
    CHECK((b - fit.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("stage 2 recovers the residual heritability") {
    const int n_animals = 120, reps = 5;
    std::vector<std::array<std::string, 3>> recs;
    for (int i = 1; i <= n_animals; ++i) recs.push_back({std::to_string(i), "0", "0"});
    Pedigree ped = Pedigree::from_records(recs);

    Rng rng(11);
    PhenotypeTable source;
    source.trait_names = {"dmi"};
    source.traits = Eigen::MatrixXd::Zero(n_animals * reps, 1);
    Eigen::VectorXd res(n_animals * reps);
    int row = 0;
    for (int i = 1; i <= n_animals; ++i) {
        double a = std::sqrt(0.24) * rng.gaussian();
        for (int r = 0; r < reps; ++r) {
            source.animal.push_back(std::to_string(i));
            source.dim.push_back(std::to_string(71 + row % 5));
            source.test_week.push_back(std::to_string(1 + row % 8));
            res(row) = a + std::sqrt(0.76) * rng.gaussian();
            ++row;
        }
    }
    Design design = build_design(source, ped);

    ModelSpec spec;
    spec.mcmc.chains = 2;
    spec.mcmc.length = 600;
    spec.mcmc.burnin = 300;
    spec.mcmc.thin = 2;
    spec.mcmc.seed = 5;
    Stage2Fit fit = fit_stage2(res, source, design, ped.inverse_numerator_matrix(), spec);

    CHECK(fit.genetic_values.size() == ped.size());
    CHECK(fit.dim_effects.size() == design.n_dim());

    std::vector<double> pool;
    int col = -1;
    for (size_t p = 0; p < fit.chains[0].param_names.size(); ++p)
        if (fit.chains[0].param_names[p] == "h2_rfi") col = static_cast<int>(p);
    REQUIRE(col >= 0);
    for (const auto& c : fit.chains)
        for (int i = 0; i < c.samples.rows(); ++i) pool.push_back(c.samples(i, col));
    double mean = 0.0;
    for (double v : pool) mean += v;
    mean /= static_cast<double>(pool.size());
    double ss = 0.0;
    for (double v : pool) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(pool.size() - 1));
    CHECK_MESSAGE(std::abs(mean - 0.24) < 3.0 * sd, "h2 mean ", mean, " sd ", sd);
    CHECK(fit.h2 == doctest::Approx(mean).epsilon(1e-12));
    CHECK(fit.sigma2_a > 0.0);
    CHECK(fit.sigma2_e > 0.0);
}

TEST_CASE("stage 2 on zero residuals pins the variances at the floor") {
    std::vector<std::array<std::string, 3>> recs;
    for (int i = 1; i <= 10; ++i) recs.push_back({std::to_string(i), "0", "0"});
    Pedigree ped = Pedigree::from_records(recs);

    PhenotypeTable source;
    source.trait_names = {"dmi"};
    source.traits = Eigen::MatrixXd::Zero(30, 1);
    for (int r = 0; r < 30; ++r) {
        source.animal.push_back(std::to_string(1 + r % 10));
        source.dim.push_back(std::to_string(71 + r % 3));
        source.test_week.push_back(std::to_string(1 + r % 5));
    }
    Design design = build_design(source, ped);

    ModelSpec spec;
    spec.effects_overridden = true;
    spec.intercept = spec.dim_effect = spec.tw_effect = false;
    spec.animal_effect = true;
    spec.mcmc.chains = 1;
    spec.mcmc.length = 400;
    spec.mcmc.burnin = 350;
    spec.mcmc.thin = 2;
    Stage2Fit fit = fit_stage2(Eigen::VectorXd::Zero(30), source, design,
                               ped.inverse_numerator_matrix(), spec);
    CHECK(fit.sigma2_a < 1e-6);
    CHECK(fit.sigma2_e < 1e-6);

    CHECK_THROWS_AS(fit_stage2(Eigen::VectorXd::Zero(29), source, design,
                               ped.inverse_numerator_matrix(), spec),
                    ValidationError);
}

TEST_CASE("phenotypic partial regression input validation") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.9, 0.2, 1.0;  // asymmetric
    CHECK_THROWS_AS(phenotypic_partial_regression(Eigen::Vector2d(0.1, 0.2), bad),
                    ValidationError);
    Eigen::MatrixXd npd(2, 2);
    npd << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(phenotypic_partial_regression(Eigen::Vector2d(0.1, 0.2), npd),
                    NumericalError);
}

TEST_SUITE_END();
