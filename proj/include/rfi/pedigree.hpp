#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace rfi {

/// Pedigree stored in an internal order where parents precede offspring.
/// Unknown parents are -1 and treated as unrelated, non-inbred founders.
class Pedigree {
public:
    /// Records are (animal, sire, dam) labels; "0" marks an unknown parent.
    static Pedigree from_records(
        const std::vector<std::array<std::string, 3>>& records);

    /// CSV with header animal,sire,dam.
    static Pedigree from_csv(const std::string& path);

    int size() const { return static_cast<int>(ids_.size()); }
    const std::vector<std::string>& ids() const { return ids_; }
    int sire(int i) const { return sire_[i]; }
    int dam(int i) const { return dam_[i]; }

    /// Index of an animal label, or -1.
    int find(const std::string& id) const;

    /// Inbreeding coefficients F, computed ancestor-by-ancestor without a dense matrix.
    const std::vector<double>& inbreeding() const { return inbreeding_; }

    /// Within-family (Mendelian sampling) variance scale d_i:
    /// 1 with no known parents, 0.75 - F_p/4 with one, 0.5 - (F_s + F_d)/4 with two.
    const std::vector<double>& mendelian_variance() const { return mendelian_var_; }

    /// Dense additive relationship matrix by the tabular method. O(n^2) memory.
    Eigen::MatrixXd numerator_matrix() const;

    /// Sparse inverse of the relationship matrix assembled directly from the
    /// pedigree, accounting for inbreeding through the Mendelian variances.
    Eigen::SparseMatrix<double> inverse_numerator_matrix() const;

private:
    void finalize();

    std::vector<std::string> ids_;
    std::vector<int> sire_, dam_;
    std::unordered_map<std::string, int> index_;
    std::vector<double> inbreeding_, mendelian_var_;
};

}  // namespace rfi
