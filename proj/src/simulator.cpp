#include "rfi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rfi/errors.hpp"
#include "rfi/rng.hpp"
#include "rfi/structural.hpp"

namespace rfi {

namespace {

/// Symmetric PSD square root; tolerates zero eigenvalues, rejects negative ones.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& M, const char* what) {
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError(std::string(what) + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    Eigen::VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-10)
        throw NumericalError(std::string(what) + " is not positive semi-definite");
    Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<int> balanced_levels(int n, int n_levels, Rng& rng) {
    std::vector<int> lv(n);
    for (int i = 0; i < n; ++i) lv[i] = i % n_levels;
    std::shuffle(lv.begin(), lv.end(), rng.engine());
    return lv;
}

}  // namespace

Eigen::MatrixXd GroundTruth::phenotypic_covariance() const {
    Eigen::MatrixXd eq_cov = components.G0() + components.R0();
    eq_cov += Eigen::MatrixXd(tw_var.asDiagonal());
    Eigen::MatrixXd Linv = structural_inverse(lambda);
    return Linv * eq_cov * Linv.transpose();
}

void GroundTruth::validate() const {
    const int nt = k();
    if (static_cast<int>(lambda.size()) != nt - 1)
        throw ValidationError("truth: lambda size must be k-1");
    if (tw_var.size() != nt || raw_mean.size() != nt || raw_sd.size() != nt)
        throw ValidationError("truth: per-trait vectors must have k entries");
    if (tw_var.minCoeff() < 0.0) throw ValidationError("truth: negative test-week variance");
    if (components.sigma2_a1 < 0.0 || components.sigma2_e1 < 0.0)
        throw ValidationError("truth: negative intake-residual variance component");
    if (raw_sd.minCoeff() <= 0.0) throw ValidationError("truth: raw SDs must be positive");
    psd_sqrt(components.G_sink, "sink genetic block");
    psd_sqrt(components.R_sink, "sink residual block");
    if (dim_effects.size() > 0 && dim_effects.cols() != nt)
        throw ValidationError("truth: dim effect matrix needs k columns");
    bool zero_dim = dim_effects.size() == 0 || dim_effects.cwiseAbs().maxCoeff() == 0.0;
    if (zero_dim) {
        Eigen::VectorXd pv = phenotypic_covariance().diagonal();
        for (int t = 0; t < nt; ++t)
            if (std::abs(pv(t) - 1.0) > 0.01)
                throw ValidationError("truth: standardized phenotypic variance of trait " +
                                      std::to_string(t) + " is " + std::to_string(pv(t)) +
                                      ", expected 1");
    }
}

Pedigree simulate_pedigree(int n_sires, int n_dams, int n_offspring, std::uint64_t seed) {
    if (n_sires < 1 || n_dams < 1 || n_offspring < 1)
        throw ValidationError("simulated pedigree needs at least one sire, dam, and offspring");
    Rng rng(seed);
    std::vector<std::array<std::string, 3>> recs;
    recs.reserve(n_sires + n_dams + n_offspring);
    for (int s = 0; s < n_sires; ++s)
        recs.push_back({std::to_string(s + 1), "0", "0"});
    for (int d = 0; d < n_dams; ++d)
        recs.push_back({std::to_string(n_sires + d + 1), "0", "0"});
    for (int o = 0; o < n_offspring; ++o) {
        int sire = 1 + static_cast<int>(rng.uniform() * n_sires);
        int dam = n_sires + 1 + static_cast<int>(rng.uniform() * n_dams);
        sire = std::min(sire, n_sires);
        dam = std::min(dam, n_sires + n_dams);
        recs.push_back({std::to_string(n_sires + n_dams + o + 1), std::to_string(sire),
                        std::to_string(dam)});
    }
    return Pedigree::from_records(recs);
}

SimulationOutput simulate_phenotypes(const Pedigree& ped, const GroundTruth& truth,
                                     int n_dim_levels, int n_tw_levels, std::uint64_t seed,
                                     bool raw_scale) {
    const int nt = truth.k();
    const int q = ped.size();
    if (n_dim_levels < 1 || n_tw_levels < 1)
        throw ValidationError("simulation needs at least one level per class factor");
    Eigen::MatrixXd g_root = psd_sqrt(truth.components.G0(), "genetic covariance");
    Eigen::MatrixXd r_root = psd_sqrt(truth.components.R0(), "residual covariance");

    Rng rng(seed);

    // test-week effects, one row per level
    Eigen::MatrixXd tw_eff(n_tw_levels, nt);
    Eigen::VectorXd tw_sd = truth.tw_var.cwiseSqrt();
    for (int l = 0; l < n_tw_levels; ++l)
        for (int t = 0; t < nt; ++t) tw_eff(l, t) = tw_sd(t) * rng.gaussian();

    // genetic values cascade through the pedigree: parent average plus a
    // within-family deviation scaled by the Mendelian variance
    Eigen::MatrixXd a(q, nt);
    const auto& dvar = ped.mendelian_variance();
    std::vector<int> record_animals;
    for (int i = 0; i < q; ++i) {
        Eigen::VectorXd dev = g_root * rng.gaussian_vector(nt);
        int s = ped.sire(i), d = ped.dam(i);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(nt);
        if (s >= 0) mean += 0.5 * a.row(s).transpose();
        if (d >= 0) mean += 0.5 * a.row(d).transpose();
        a.row(i) = (mean + std::sqrt(dvar[i]) * dev).transpose();
        if (s >= 0 || d >= 0) record_animals.push_back(i);
    }
    if (record_animals.empty())
        throw ValidationError("pedigree has no offspring to phenotype");

    const int n = static_cast<int>(record_animals.size());
    auto dim_lv = balanced_levels(n, n_dim_levels, rng);
    auto tw_lv = balanced_levels(n, n_tw_levels, rng);

    SimulationOutput out;
    out.genetic_values = a;
    PhenotypeTable& tab = out.table;
    tab.trait_names = {"dmi", "mbw", "milkne", "dbw"};
    if (nt != 4) {
        tab.trait_names.clear();
        for (int t = 0; t < nt; ++t) tab.trait_names.push_back("t" + std::to_string(t));
    }
    tab.traits.resize(n, nt);
    for (int r = 0; r < n; ++r) {
        int i = record_animals[r];
        Eigen::VectorXd e = r_root * rng.gaussian_vector(nt);
        Eigen::VectorXd y(nt);
        for (int t = 1; t < nt; ++t) {
            double dim_part = truth.dim_effects.size() ? truth.dim_effects(dim_lv[r], t) : 0.0;
            y(t) = dim_part + tw_eff(tw_lv[r], t) + a(i, t) + e(t);
        }
        double dim0 = truth.dim_effects.size() ? truth.dim_effects(dim_lv[r], 0) : 0.0;
        y(0) = dim0 + tw_eff(tw_lv[r], 0) + a(i, 0) + e(0);
        for (int t = 1; t < nt; ++t) y(0) += truth.lambda(t - 1) * y(t);
        if (raw_scale)
            y = (truth.raw_mean.array() + truth.raw_sd.array() * y.array()).matrix();
        tab.traits.row(r) = y.transpose();
        tab.animal.push_back(ped.ids()[i]);
        tab.dim.push_back(std::to_string(71 + dim_lv[r]));
        tab.test_week.push_back(std::to_string(tw_lv[r] + 1));
    }
    return out;
}

GroundTruth paper_replica_truth(bool with_test_week) {
    GroundTruth t;
    t.lambda.resize(3);
    t.lambda << 0.351, 0.514, 0.117;
    Eigen::Vector3d c12(0.441, 0.556, 0.166);
    Eigen::Vector3d sink_h2(0.589, 0.190, 0.002);
    Eigen::Matrix3d P_s;
    P_s << 1.0, 0.132, 0.193,
           0.132, 1.0, -0.036,
           0.193, -0.036, 1.0;
    Eigen::Matrix3d rg;
    rg << 1.0, 0.145, 0.184,
          0.145, 1.0, -0.089,
          0.184, -0.089, 1.0;

    double tw = with_test_week ? 0.05 : 0.0;
    t.tw_var = Eigen::VectorXd::Constant(4, tw);

    // each sink's unit phenotypic variance: tw carved out first, the rest
    // split into genetic and residual parts by its heritability
    Eigen::Vector3d g_diag, r_diag;
    for (int s = 0; s < 3; ++s) {
        double avail = 1.0 - tw;
        g_diag(s) = sink_h2(s) * avail;
        r_diag(s) = (1.0 - sink_h2(s)) * avail;
    }
    t.components.G_sink.resize(3, 3);
    t.components.R_sink.resize(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) {
                t.components.G_sink(i, j) = g_diag(i);
                t.components.R_sink(i, j) = r_diag(i);
            } else {
                double g = rg(i, j) * std::sqrt(g_diag(i) * g_diag(j));
                t.components.G_sink(i, j) = g;
                t.components.R_sink(i, j) = P_s(i, j) - g;  // tw adds no cross-trait share
            }
        }
    }

    double rfi_var = 1.0 - t.lambda.dot(c12);
    double avail = rfi_var - tw;
    t.components.sigma2_a1 = 0.240 * avail;
    t.components.sigma2_e1 = 0.760 * avail;

    t.raw_mean.resize(4);
    t.raw_mean << 28.9, 113.8, 21.1, 0.47;
    t.raw_sd.resize(4);
    t.raw_sd << 3.81, 6.71, 2.18, 0.22;
    t.dim_effects = Eigen::MatrixXd::Zero(7, 4);
    t.validate();
    return t;
}

}  // namespace rfi
