#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfi/pedigree.hpp"

namespace rfi {

/// One record per animal: class labels for days in milk and test week plus
/// one column per trait. Trait order is fixed: intake first, then the
/// energy-sink traits it will be regressed on.
struct PhenotypeTable {
    std::vector<std::string> animal;
    std::vector<std::string> dim;
    std::vector<std::string> test_week;
    std::vector<std::string> trait_names;
    Eigen::MatrixXd traits;  // n x k

    int n() const { return static_cast<int>(animal.size()); }
    int k() const { return static_cast<int>(traits.cols()); }

    static PhenotypeTable from_csv(const std::string& path);
    void to_csv(const std::string& path) const;
};

/// Column means and standard deviations used for z-scaling.
struct Standardization {
    Eigen::VectorXd mean, sd;
};

/// Z-scale every trait column; sd uses the n-1 divisor.
PhenotypeTable standardize(const PhenotypeTable& table, Standardization* stats = nullptr);

/// Record-to-level maps shared by every model family.
struct Design {
    std::vector<int> dim_level;      // n, indexes dim_labels
    std::vector<int> tw_level;       // n, indexes tw_labels
    std::vector<int> animal;         // n, indexes the pedigree
    std::vector<std::string> dim_labels, tw_labels;
    std::vector<std::vector<int>> records_by_dim, records_by_tw;
    std::vector<std::vector<int>> records_by_animal;  // q entries, most empty for parents

    int n() const { return static_cast<int>(animal.size()); }
    int n_dim() const { return static_cast<int>(dim_labels.size()); }
    int n_tw() const { return static_cast<int>(tw_labels.size()); }
    int q() const { return static_cast<int>(records_by_animal.size()); }
};

/// Join records against the pedigree and factor the class labels into levels.
/// Every phenotyped animal must appear in the pedigree.
Design build_design(const PhenotypeTable& table, const Pedigree& pedigree);

}  // namespace rfi
