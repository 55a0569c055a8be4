#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfi/errors.hpp"

namespace rfi {

enum class Family { lr1, lr2, lr3, rsem1, rsem2, rsem3, st, mt, mt_chol };

/// Hyperparameters of every prior in play. Defaults are effectively flat for
/// structural and fixed effects and flat (improper) for scalar variances;
/// covariance blocks get a proper but weak inverse-Wishart.
struct PriorSpec {
    double lambda0 = 0.0;   // structural-coefficient prior mean
    double tau2 = 1e6;      // structural-coefficient prior variance
    double beta0 = 0.0;     // fixed-effect prior mean
    double omega2 = 1e6;    // fixed-effect prior variance
    double nu0 = -2.0;      // scalar-variance prior df
    double s02 = 0.0;       // scalar-variance prior scale
    double nu0_tw = -2.0;   // test-week variance prior df
    double s02_tw = 0.0;
    double iw_df_margin = 2.0;  // block df = block dim + margin
    double iw_scale = 0.01;     // block scale matrix = iw_scale * I

    void validate() const {
        if (tau2 <= 0.0 || omega2 <= 0.0)
            throw ValidationError("prior variances tau2 and omega2 must be positive");
        if (iw_scale <= 0.0) throw ValidationError("inverse-Wishart scale must be positive");
    }
};

struct McmcSpec {
    int chains = 30;
    int length = 2200;
    int burnin = 1000;
    int thin = 2;
    std::uint64_t seed = 20240615;
    bool random_init = true;

    void validate() const {
        if (length < 1) throw ValidationError("mcmc.length must be >= 1");
        if (burnin < 0 || burnin >= length)
            throw ValidationError("mcmc.burnin must satisfy 0 <= burnin < length");
        if (thin < 1) throw ValidationError("mcmc.thin must be >= 1");
        if (chains < 1) throw ValidationError("mcmc.chains must be >= 1");
    }

    int saved_per_chain() const { return (length - burnin) / thin; }
};

struct ModelSpec {
    Family family = Family::rsem3;
    bool intercept = false;
    bool dim_effect = true;
    bool tw_effect = true;
    bool animal_effect = true;
    bool effects_overridden = false;  // when false, family defaults apply
    std::vector<int> sink_indices = {1, 2, 3};
    int st_trait = 0;
    bool mt_regression_per_sample = false;  // genetic partial regressions from per-sample G
    PriorSpec priors;
    McmcSpec mcmc;

    /// Fill the effect switches from the family definition unless the caller
    /// overrode them explicitly.
    void apply_family_defaults() {
        if (effects_overridden) return;
        intercept = false;
        switch (family) {
            case Family::lr1:
            case Family::rsem1:
                dim_effect = tw_effect = animal_effect = false;
                break;
            case Family::lr2:
            case Family::rsem2:
                dim_effect = animal_effect = true;
                tw_effect = false;
                break;
            default:
                dim_effect = tw_effect = animal_effect = true;
                break;
        }
    }

    void validate(int n_traits) const {
        priors.validate();
        mcmc.validate();
        if (st_trait < 0 || st_trait >= n_traits)
            throw ValidationError("st_trait index out of range");
        if (sink_indices.empty() && family != Family::st && family != Family::mt &&
            family != Family::mt_chol)
            throw ValidationError("regression families need at least one sink trait");
        for (int s : sink_indices) {
            if (s <= 0 || s >= n_traits)
                throw ValidationError(
                    "sink indices must name non-intake traits present in the data");
        }
    }
};

inline Family family_from_string(const std::string& name) {
    if (name == "lr1") return Family::lr1;
    if (name == "lr2") return Family::lr2;
    if (name == "lr3") return Family::lr3;
    if (name == "rsem1") return Family::rsem1;
    if (name == "rsem2") return Family::rsem2;
    if (name == "rsem3") return Family::rsem3;
    if (name == "st") return Family::st;
    if (name == "mt") return Family::mt;
    if (name == "mt_chol") return Family::mt_chol;
    throw ValidationError("unknown model family '" + name + "'");
}

inline std::string family_to_string(Family f) {
    switch (f) {
        case Family::lr1: return "lr1";
        case Family::lr2: return "lr2";
        case Family::lr3: return "lr3";
        case Family::rsem1: return "rsem1";
        case Family::rsem2: return "rsem2";
        case Family::rsem3: return "rsem3";
        case Family::st: return "st";
        case Family::mt: return "mt";
        case Family::mt_chol: return "mt_chol";
    }
    return "unknown";
}

}  // namespace rfi
