#include <doctest.h>

#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rfi/errors.hpp"
#include "rfi/pedigree.hpp"

using rfi::Pedigree;

namespace {

// Independent reference: textbook recursion on relationship coefficients,
// memoized, no tabular sweep shared with the implementation under test.
class KinshipOracle {
public:
    explicit KinshipOracle(const Pedigree& ped) : ped_(ped) {}

    double relationship(int i, int j) {
        if (i < 0 || j < 0) return 0.0;
        if (i < j) std::swap(i, j);
        auto key = std::make_pair(i, j);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        double v;
        if (i == j) {
            v = 1.0 + 0.5 * relationship(ped_.sire(i), ped_.dam(i));
        } else {
            v = 0.5 * (relationship(j, ped_.sire(i)) + relationship(j, ped_.dam(i)));
        }
        memo_[key] = v;
        return v;
    }

private:
    const Pedigree& ped_;
    std::map<std::pair<int, int>, double> memo_;
};

std::vector<std::array<std::string, 3>> classic_six() {
    return {{"1", "0", "0"}, {"2", "0", "0"}, {"3", "1", "2"},
            {"4", "1", "0"}, {"5", "4", "3"}, {"6", "5", "2"}};
}

}  // namespace

TEST_SUITE_BEGIN("pedigree");

TEST_CASE("relationship matrix matches recursive reference on a classic example") {
    auto ped = Pedigree::from_records(classic_six());
    auto A = ped.numerator_matrix();
    KinshipOracle oracle(ped);
    for (int i = 0; i < ped.size(); ++i)
        for (int j = 0; j <= i; ++j)
            CHECK(A(i, j) == doctest::Approx(oracle.relationship(i, j)).epsilon(1e-12));

    int i5 = ped.find("5"), i6 = ped.find("6"), i2 = ped.find("2");
    CHECK(A(i5, i5) == doctest::Approx(1.125));
    CHECK(A(i6, i6) == doctest::Approx(1.125));
    CHECK(A(i2, i6) == doctest::Approx(0.625));
    CHECK(ped.inbreeding()[i5] == doctest::Approx(0.125));
    CHECK(ped.inbreeding()[i6] == doctest::Approx(0.125));
    CHECK(ped.inbreeding()[ped.find("1")] == doctest::Approx(0.0));
}

TEST_CASE("inverse assembled from pedigree rules inverts the tabular matrix") {
    auto ped = Pedigree::from_records(classic_six());
    Eigen::MatrixXd A = ped.numerator_matrix();
    Eigen::MatrixXd Ainv = Eigen::MatrixXd(ped.inverse_numerator_matrix());
    Eigen::MatrixXd prod = A * Ainv;
    CHECK((prod - Eigen::MatrixXd::Identity(ped.size(), ped.size())).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((Ainv - Ainv.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trio inverse matches hand-computed values") {
    auto ped = Pedigree::from_records({{"s", "0", "0"}, {"d", "0", "0"}, {"kid", "s", "d"}});
    Eigen::MatrixXd Ainv = Eigen::MatrixXd(ped.inverse_numerator_matrix());
    int s = ped.find("s"), d = ped.find("d"), k = ped.find("kid");
    CHECK(Ainv(s, s) == doctest::Approx(1.5));
    CHECK(Ainv(d, d) == doctest::Approx(1.5));
    CHECK(Ainv(k, k) == doctest::Approx(2.0));
    CHECK(Ainv(s, k) == doctest::Approx(-1.0));
    CHECK(Ainv(s, d) == doctest::Approx(0.5));
}

TEST_CASE("random pedigrees: tabular, recursive, and inverse routes agree") {
    std::mt19937 rng(4711);
    for (int rep = 0; rep < 5; ++rep) {
        int n = 40;
        std::vector<std::array<std::string, 3>> recs;
        for (int i = 0; i < n; ++i) {
            std::string sire = "0", dam = "0";
            if (i > 1) {
                // Parents drawn from earlier animals; occasionally unknown.
                std::uniform_int_distribution<int> pick(1, i);
                if (rng() % 4 != 0) sire = std::to_string(pick(rng));
                if (rng() % 4 != 0) {
                    dam = std::to_string(pick(rng));
                    if (dam == sire) dam = "0";
                }
            }
            recs.push_back({std::to_string(i + 1), sire, dam});
        }
        std::shuffle(recs.begin(), recs.end(), rng);
        auto ped = Pedigree::from_records(recs);
        auto A = ped.numerator_matrix();
        KinshipOracle oracle(ped);
        double max_err = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j)
                max_err = std::max(max_err, std::abs(A(i, j) - oracle.relationship(i, j)));
        CHECK(max_err < 1e-12);
        Eigen::MatrixXd prod = A * Eigen::MatrixXd(ped.inverse_numerator_matrix());
        CHECK((prod - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("input order does not change results") {
    auto fwd = Pedigree::from_records(classic_six());
    auto recs = classic_six();
    std::reverse(recs.begin(), recs.end());
    auto rev = Pedigree::from_records(recs);
    auto Af = fwd.numerator_matrix();
    auto Ar = rev.numerator_matrix();
    for (const auto& a : fwd.ids())
        for (const auto& b : fwd.ids())
            CHECK(Af(fwd.find(a), fwd.find(b)) ==
                  doctest::Approx(Ar(rev.find(a), rev.find(b))).epsilon(1e-14));
}

TEST_CASE("bad pedigrees are rejected") {
    CHECK_THROWS_AS(Pedigree::from_records({{"1", "0", "0"}, {"1", "0", "0"}}),
                    rfi::ValidationError);
    CHECK_THROWS_AS(Pedigree::from_records({{"1", "2", "0"}}), rfi::ValidationError);
    CHECK_THROWS_AS(Pedigree::from_records({{"1", "1", "0"}}), rfi::ValidationError);
    CHECK_THROWS_AS(
        Pedigree::from_records({{"a", "b", "0"}, {"b", "c", "0"}, {"c", "a", "0"}}),
        rfi::ValidationError);
    CHECK_THROWS_AS(Pedigree::from_records({{"0", "0", "0"}}), rfi::ValidationError);
}

TEST_SUITE_END();
